#include "annoreview/llm_gateway.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "annoreview/criteria.hpp"
#include "annoreview/text.hpp"

using nlohmann::json;
using std::chrono::milliseconds;

namespace annoreview {

namespace {

constexpr std::string_view kBeginManuscript = "-----BEGIN MANUSCRIPT-----";
constexpr std::string_view kEndManuscript = "-----END MANUSCRIPT-----";

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex8(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(8, '0');
    for (int i = 7; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    return s;
}

bool retryable(const Error& e) {
    if (e.code() == ErrorCode::RateLimited) return true;
    if (e.code() != ErrorCode::BackendError) return false;
    const auto* failure = dynamic_cast<const BackendFailure*>(&e);
    return failure == nullptr || failure->transient();
}

// Sentences of the manuscript that survive JSON encoding unchanged, with
// whitespace runs collapsed.
std::vector<std::string> quotable_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        auto s = trim(current);
        current.clear();
        const bool quotable = s.size() >= 40 && s.size() <= 400 && s.find('"') == std::string::npos &&
                              s.find('\\') == std::string::npos;
        if (quotable && std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        const bool space = c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\f' || c == '\v';
        if (space) {
            if (!current.empty() && current.back() != ' ') current.push_back(' ');
            continue;
        }
        current.push_back(c);
        const bool terminal = c == '.' || c == '!' || c == '?';
        if (terminal && (i + 1 == text.size() || text[i + 1] == ' ' || text[i + 1] == '\n')) flush();
    }
    flush();
    return out;
}

std::string synthetic_annotate(const GatewayRequest& request) {
    std::string_view prompt = request.prompt;
    auto begin = prompt.find(kBeginManuscript);
    auto end = prompt.rfind(kEndManuscript);
    std::string_view manuscript;
    if (begin != std::string_view::npos && end != std::string_view::npos && end > begin) {
        begin += kBeginManuscript.size();
        manuscript = prompt.substr(begin, end - begin);
    }
    const auto sentences = quotable_sentences(manuscript);
    json items = json::array();
    if (!sentences.empty()) {
        const std::size_t n = sentences.size();
        const std::size_t k = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, request.requested_items)));
        const std::size_t step = std::max<std::size_t>(1, n / k);
        const std::size_t start = fnv1a(criterion_key(request.criterion)) % n;
        std::vector<std::size_t> picked;
        for (std::size_t i = 0; picked.size() < k && i < n; ++i) {
            const std::size_t idx = (start + picked.size() * step + i / k) % n;
            if (std::find(picked.begin(), picked.end(), idx) == picked.end()) picked.push_back(idx);
        }
        for (auto idx : picked) {
            const auto& s = sentences[idx];
            const bool strength = (fnv1a(request.criterion + "\n" + s) & 1U) == 0;
            items.push_back({{"excerpt", s},
                             {"sentiment", strength ? "strength" : "weakness"},
                             {"comment", "Mock assessment for " + request.criterion + "."}});
        }
    }
    return items.dump(2, ' ', false, json::error_handler_t::replace);
}

}  // namespace

std::string_view to_string(BackendKind kind) { return kind == BackendKind::Http ? "http" : "mock"; }

std::string synthetic_response(const GatewayRequest& request) {
    if (request.template_name == TemplateName::Annotate) return synthetic_annotate(request);
    std::string out = "Mock " + std::string(to_string(request.template_name)) + " response";
    if (!request.criterion.empty()) out += " for " + request.criterion;
    out += " [" + hex8(fnv1a(request.prompt)) + "].";
    return out;
}

// --- MockBackend -------------------------------------------------------------

MockBackend::MockBackend(std::vector<MockFixture> fixtures) : fixtures_(std::move(fixtures)) {}

std::vector<MockFixture> MockBackend::parse_fixtures(const json& doc, const std::filesystem::path& base_dir) {
    const json* list = &doc;
    if (doc.is_object()) {
        if (!doc.contains("fixtures")) throw Error(ErrorCode::InvalidArgument, "fixture file needs a \"fixtures\" array");
        list = &doc.at("fixtures");
    }
    if (!list->is_array()) throw Error(ErrorCode::InvalidArgument, "\"fixtures\" must be an array");
    std::vector<MockFixture> out;
    try {
        for (const auto& item : *list) {
            MockFixture f;
            f.template_name = item.at("template").get<std::string>();
            if (f.template_name != "*") (void)parse_template_name(f.template_name);
            f.criterion = item.value("criterion", std::string("*"));
            if (item.contains("response")) {
                f.response = item.at("response").get<std::string>();
            } else if (item.contains("response_json")) {
                f.response = item.at("response_json").dump(2, ' ', false);
            } else if (item.contains("response_file")) {
                const auto path = base_dir / item.at("response_file").get<std::string>();
                std::ifstream in(path, std::ios::binary);
                if (!in) throw Error(ErrorCode::NotFound, "fixture response file not found: " + path.string());
                std::ostringstream body;
                body << in.rdbuf();
                f.response = body.str();
            }
            f.delay_ms = item.value("delay_ms", 0);
            if (item.contains("error") && !item.at("error").is_null()) {
                const auto name = item.at("error").get<std::string>();
                f.error = parse_error_code(name);
                if (!f.error) throw Error(ErrorCode::InvalidArgument, "unknown fixture error '" + name + "'");
            }
            f.fail_times = item.value("fail_times", 0);
            out.push_back(std::move(f));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("bad fixture: ") + e.what());
    }
    return out;
}

std::shared_ptr<MockBackend> MockBackend::from_path(const std::filesystem::path& path) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(path)) {
        for (const auto& entry : std::filesystem::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
    } else if (std::filesystem::is_regular_file(path)) {
        files.push_back(path);
    } else {
        throw Error(ErrorCode::NotFound, "mock fixtures not found: " + path.string());
    }
    std::vector<MockFixture> all;
    for (const auto& file : files) {
        std::ifstream in(file);
        json doc = json::parse(in, nullptr, false);
        if (doc.is_discarded()) throw Error(ErrorCode::InvalidArgument, "fixture file is not JSON: " + file.string());
        auto parsed = parse_fixtures(doc, file.parent_path());
        all.insert(all.end(), std::make_move_iterator(parsed.begin()), std::make_move_iterator(parsed.end()));
    }
    return std::make_shared<MockBackend>(std::move(all));
}

void MockBackend::add_fixture(MockFixture fixture) {
    std::lock_guard lock(mutex_);
    fixtures_.push_back(std::move(fixture));
}

const MockFixture* MockBackend::find(const GatewayRequest& request) const {
    const auto name = to_string(request.template_name);
    const auto key = criterion_key(request.criterion);
    const MockFixture* any_criterion = nullptr;
    const MockFixture* any_template = nullptr;
    for (const auto& f : fixtures_) {
        const bool criterion_any = f.criterion == "*";
        if (f.template_name == name) {
            if (!criterion_any && criterion_key(f.criterion) == key) return &f;
            if (criterion_any && any_criterion == nullptr) any_criterion = &f;
        } else if (f.template_name == "*" && criterion_any && any_template == nullptr) {
            any_template = &f;
        }
    }
    return any_criterion != nullptr ? any_criterion : any_template;
}

GatewayResponse MockBackend::complete(const GatewayRequest& request, milliseconds timeout) {
    const auto started = std::chrono::steady_clock::now();
    std::optional<MockFixture> fixture;
    bool fail = false;
    {
        std::lock_guard lock(mutex_);
        received_.push_back(request);
        if (const auto* f = find(request)) {
            fixture = *f;
            if (f->error) {
                auto& served = failures_served_[static_cast<std::size_t>(f - fixtures_.data())];
                if (f->fail_times == 0 || served < f->fail_times) {
                    ++served;
                    fail = true;
                }
            }
        }
    }
    if (fixture && fixture->delay_ms > 0) {
        const milliseconds delay(fixture->delay_ms);
        if (delay > timeout) {
            std::this_thread::sleep_for(timeout);
            throw BackendFailure(ErrorCode::Timeout, "mock response exceeded " + std::to_string(timeout.count()) + " ms",
                                 false);
        }
        std::this_thread::sleep_for(delay);
    }
    if (fail) {
        const auto code = *fixture->error;
        throw BackendFailure(code, "scripted mock failure",
                             code == ErrorCode::RateLimited || code == ErrorCode::BackendError);
    }
    GatewayResponse response;
    response.backend = BackendKind::Mock;
    response.text = fixture && fixture->response ? *fixture->response : synthetic_response(request);
    response.latency = std::chrono::duration_cast<milliseconds>(std::chrono::steady_clock::now() - started);
    return response;
}

std::vector<GatewayRequest> MockBackend::received() const {
    std::lock_guard lock(mutex_);
    return received_;
}

// --- HttpBackend -------------------------------------------------------------

HttpBackend::HttpBackend(std::string endpoint, std::string api_key_env, std::string model_name)
    : api_key_env_(std::move(api_key_env)), model_name_(std::move(model_name)) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(endpoint, m, url)) {
        throw Error(ErrorCode::InvalidArgument, "llm.endpoint must be an http(s) URL, got '" + endpoint + "'");
    }
    scheme_host_port_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/";
}

GatewayResponse HttpBackend::complete(const GatewayRequest& request, milliseconds timeout) {
    const char* key = std::getenv(api_key_env_.c_str());
    if (key == nullptr || *key == '\0') {
        throw BackendFailure(ErrorCode::AuthFailure, "environment variable " + api_key_env_ + " is not set", false);
    }
    const auto started = std::chrono::steady_clock::now();
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    json body{{"model", model_name_},
              {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
              {"temperature", request.temperature},
              {"max_tokens", request.max_output_tokens}};
    httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    const auto elapsed = std::chrono::duration_cast<milliseconds>(std::chrono::steady_clock::now() - started);

    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || elapsed >= timeout) {
            throw BackendFailure(ErrorCode::Timeout, "no response within " + std::to_string(timeout.count()) + " ms",
                                 false);
        }
        throw BackendFailure(ErrorCode::BackendError, "request failed: " + httplib::to_string(err), true);
    }
    const int status = res->status;
    if (status == 401 || status == 403) {
        throw BackendFailure(ErrorCode::AuthFailure, "endpoint rejected the credential (HTTP " + std::to_string(status) + ")",
                             false);
    }
    if (status == 429) throw BackendFailure(ErrorCode::RateLimited, "HTTP 429", true);
    if (status >= 500) throw BackendFailure(ErrorCode::BackendError, "HTTP " + std::to_string(status), true);
    if (status != 200) throw BackendFailure(ErrorCode::BackendError, "HTTP " + std::to_string(status), false);

    const json doc = json::parse(res->body, nullptr, false);
    if (doc.is_discarded()) throw BackendFailure(ErrorCode::BackendError, "endpoint returned non-JSON body", false);
    GatewayResponse out;
    out.backend = BackendKind::Http;
    out.latency = elapsed;
    try {
        out.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
        if (doc.contains("usage") && doc.at("usage").is_object()) {
            const auto& u = doc.at("usage");
            out.token_usage = TokenUsage{u.value("prompt_tokens", 0), u.value("completion_tokens", 0)};
        }
    } catch (const json::exception&) {
        throw BackendFailure(ErrorCode::BackendError, "unexpected chat-completion response shape", false);
    }
    return out;
}

// --- Gateway -----------------------------------------------------------------

GatewayOptions GatewayOptions::from_config(const LlmConfig& llm) {
    GatewayOptions o;
    o.temperature = llm.temperature;
    o.max_retries = llm.max_retries;
    o.timeout = milliseconds(static_cast<std::int64_t>(llm.timeout_seconds * 1000.0));
    o.backoff_base = milliseconds(llm.backoff_ms);
    o.max_concurrency = llm.max_concurrency;
    o.max_output_tokens = llm.max_output_tokens;
    return o;
}

class Gateway::Slot {
public:
    explicit Slot(Gateway& g) : g_(g) {
        std::unique_lock lock(g_.mutex_);
        g_.slot_freed_.wait(lock, [&] { return g_.in_flight_ < g_.options_.max_concurrency; });
        ++g_.in_flight_;
    }
    ~Slot() {
        {
            std::lock_guard lock(g_.mutex_);
            --g_.in_flight_;
        }
        g_.slot_freed_.notify_one();
    }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

private:
    Gateway& g_;
};

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options, Clock clock)
    : backend_(std::move(backend)), options_(options), clock_(std::move(clock)) {
    if (!backend_) throw Error(ErrorCode::InvalidArgument, "gateway needs a backend");
    if (options_.max_concurrency == 0) options_.max_concurrency = 1;
}

std::shared_ptr<Backend> Gateway::make_backend(const LlmConfig& llm) {
    if (llm.backend == "mock") {
        if (llm.mock_fixtures) return MockBackend::from_path(*llm.mock_fixtures);
        return std::make_shared<MockBackend>();
    }
    if (llm.backend == "http") return std::make_shared<HttpBackend>(llm.endpoint, llm.api_key_env, llm.model_name);
    throw Error(ErrorCode::InvalidArgument, "unknown llm backend '" + llm.backend + "'");
}

GatewayResponse Gateway::complete(const std::string& session_id, TemplateName template_name, std::string prompt,
                                  std::string criterion, int requested_items) {
    if (prompt.empty()) throw Error(ErrorCode::InvalidArgument, "prompt must not be empty");
    GatewayRequest request;
    {
        std::lock_guard lock(mutex_);
        ++total_calls_;
        request.request_id = "r" + std::to_string(++next_request_[session_id]);
        logs_[session_id].push_back({request.request_id, template_name, iso_timestamp(clock_())});
    }
    request.prompt = std::move(prompt);
    request.max_output_tokens = options_.max_output_tokens;
    request.temperature = options_.temperature;
    request.template_name = template_name;
    request.criterion = std::move(criterion);
    request.requested_items = requested_items;

    Slot slot(*this);
    for (int attempt = 0;; ++attempt) {
        try {
            return backend_->complete(request, options_.timeout);
        } catch (const Error& e) {
            if (!retryable(e) || attempt >= options_.max_retries) throw;
        }
        std::this_thread::sleep_for(options_.backoff_base * (1LL << attempt));
    }
}

std::vector<CallLogEntry> Gateway::call_log(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    const auto it = logs_.find(session_id);
    return it == logs_.end() ? std::vector<CallLogEntry>{} : it->second;
}

std::size_t Gateway::call_count() const {
    std::lock_guard lock(mutex_);
    return total_calls_;
}

void Gateway::purge_session(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    logs_.erase(session_id);
    next_request_.erase(session_id);
}

}  // namespace annoreview
