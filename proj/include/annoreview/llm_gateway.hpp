#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "annoreview/clock.hpp"
#include "annoreview/config.hpp"
#include "annoreview/error.hpp"
#include "annoreview/prompts.hpp"

namespace annoreview {

enum class BackendKind { Http, Mock };
[[nodiscard]] std::string_view to_string(BackendKind kind);

struct GatewayRequest {
    std::string prompt;
    int max_output_tokens = 1024;
    double temperature = 0.0;
    std::string request_id;
    // Routing metadata; the mock keys its fixtures on these.
    TemplateName template_name = TemplateName::Annotate;
    std::string criterion;
    /// Number of items an annotate prompt asks for; 0 otherwise.
    int requested_items = 0;
};

struct TokenUsage {
    int input = 0;
    int output = 0;
};

struct GatewayResponse {
    std::string text;
    BackendKind backend = BackendKind::Mock;
    std::chrono::milliseconds latency{0};
    std::optional<TokenUsage> token_usage;
};

/// Backend failure that carries whether a retry may help.
class BackendFailure : public Error {
public:
    BackendFailure(ErrorCode code, const std::string& message, bool transient)
        : Error(code, message), transient_(transient) {}
    [[nodiscard]] bool transient() const { return transient_; }

private:
    bool transient_;
};

class Backend {
public:
    virtual ~Backend() = default;
    [[nodiscard]] virtual BackendKind kind() const = 0;
    /// Must give up with Timeout once `timeout` has elapsed.
    virtual GatewayResponse complete(const GatewayRequest& request, std::chrono::milliseconds timeout) = 0;
};

/// One scripted answer. `error`, when set, is raised for the first
/// `fail_times` calls (every call when fail_times is 0); after that
/// `response` is returned, or the synthetic reply when it is unset.
struct MockFixture {
    std::string template_name;
    /// Criterion name, or "*" for any.
    std::string criterion = "*";
    /// Without one the synthetic reply is served.
    std::optional<std::string> response;
    int delay_ms = 0;
    std::optional<ErrorCode> error;
    int fail_times = 0;
};

/// Deterministic lookup-table backend. Requests without a fixture get a
/// synthetic reply; annotate replies quote sentences of the manuscript
/// section of the prompt.
class MockBackend : public Backend {
public:
    MockBackend() = default;
    explicit MockBackend(std::vector<MockFixture> fixtures);

    /// Reads a fixture file, or every `*.json` file of a directory in name
    /// order. Throws NotFound or InvalidArgument.
    [[nodiscard]] static std::shared_ptr<MockBackend> from_path(const std::filesystem::path& path);
    [[nodiscard]] static std::vector<MockFixture> parse_fixtures(const nlohmann::json& doc,
                                                                 const std::filesystem::path& base_dir = {});

    void add_fixture(MockFixture fixture);

    [[nodiscard]] BackendKind kind() const override { return BackendKind::Mock; }
    GatewayResponse complete(const GatewayRequest& request, std::chrono::milliseconds timeout) override;

    /// Every prompt received, in arrival order. Test hook.
    [[nodiscard]] std::vector<GatewayRequest> received() const;

private:
    const MockFixture* find(const GatewayRequest& request) const;

    mutable std::mutex mutex_;
    std::vector<MockFixture> fixtures_;
    std::map<std::size_t, int> failures_served_;
    std::vector<GatewayRequest> received_;
};

/// Synthetic reply used when no fixture matches.
[[nodiscard]] std::string synthetic_response(const GatewayRequest& request);

/// OpenAI-compatible chat-completions client.
class HttpBackend : public Backend {
public:
    /// The key is read from the environment on every call.
    HttpBackend(std::string endpoint, std::string api_key_env, std::string model_name);

    [[nodiscard]] BackendKind kind() const override { return BackendKind::Http; }
    GatewayResponse complete(const GatewayRequest& request, std::chrono::milliseconds timeout) override;

private:
    std::string scheme_host_port_;
    std::string path_;
    std::string api_key_env_;
    std::string model_name_;
};

struct GatewayOptions {
    double temperature = 0.0;
    int max_retries = 2;
    std::chrono::milliseconds timeout{60000};
    std::chrono::milliseconds backoff_base{500};
    std::size_t max_concurrency = 4;
    int max_output_tokens = 1024;

    [[nodiscard]] static GatewayOptions from_config(const LlmConfig& llm);
};

struct CallLogEntry {
    std::string request_id;
    TemplateName template_name = TemplateName::Annotate;
    std::string timestamp;
};

/// Retries, timeout, concurrency cap and the per-session call log in front
/// of a backend. Thread safe.
class Gateway {
public:
    Gateway(std::shared_ptr<Backend> backend, GatewayOptions options = {}, Clock clock = system_clock());

    /// Builds a backend from configuration. Throws InvalidArgument.
    [[nodiscard]] static std::shared_ptr<Backend> make_backend(const LlmConfig& llm);

    /// Logs the call under `session_id`, then runs it with retries on
    /// RateLimited and transient backend errors. Timeouts and auth
    /// failures are not retried.
    GatewayResponse complete(const std::string& session_id, TemplateName template_name, std::string prompt,
                             std::string criterion = {}, int requested_items = 0);

    [[nodiscard]] std::vector<CallLogEntry> call_log(const std::string& session_id) const;
    /// Calls made across all sessions since construction.
    [[nodiscard]] std::size_t call_count() const;
    void purge_session(const std::string& session_id);

    [[nodiscard]] const GatewayOptions& options() const { return options_; }
    [[nodiscard]] Backend& backend() { return *backend_; }

private:
    class Slot;

    std::shared_ptr<Backend> backend_;
    GatewayOptions options_;
    Clock clock_;

    mutable std::mutex mutex_;
    std::condition_variable slot_freed_;
    std::size_t in_flight_ = 0;
    std::size_t total_calls_ = 0;
    std::map<std::string, std::vector<CallLogEntry>, std::less<>> logs_;
    std::map<std::string, std::size_t, std::less<>> next_request_;
};

}  // namespace annoreview
