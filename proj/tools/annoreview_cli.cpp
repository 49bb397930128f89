#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "annoreview/engine.hpp"
#include "annoreview/error.hpp"
#include "annoreview/http_api.hpp"

namespace ar = annoreview;

namespace {

enum ExitCode {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kNotFound = 3,
    kEmptyInput = 4,
    kUnsupportedFormat = 5,
    kCriteriaError = 6,
    kTimeout = 7,
    kAuthFailure = 8,
    kRateLimited = 9,
    kBackendError = 10,
    kUnparseable = 11,
    kNothingToReport = 12,
    kIoError = 13,
};

int exit_code_for(ar::ErrorCode code) {
    using ar::ErrorCode;
    switch (code) {
        case ErrorCode::NotFound:
        case ErrorCode::UnknownSession:
        case ErrorCode::UnknownCriterion:
        case ErrorCode::UnknownAnnotation: return kNotFound;
        case ErrorCode::EmptyInput: return kEmptyInput;
        case ErrorCode::UnsupportedFormat: return kUnsupportedFormat;
        case ErrorCode::MalformedXml:
        case ErrorCode::DuplicateName:
        case ErrorCode::DuplicateColor:
        case ErrorCode::EmptyCriteria:
        case ErrorCode::TooManyCriteria:
        case ErrorCode::InvalidCriterion: return kCriteriaError;
        case ErrorCode::Timeout: return kTimeout;
        case ErrorCode::AuthFailure: return kAuthFailure;
        case ErrorCode::RateLimited: return kRateLimited;
        case ErrorCode::BackendError: return kBackendError;
        case ErrorCode::UnparseableResponse:
        case ErrorCode::EmptyItems: return kUnparseable;
        case ErrorCode::NoAnnotations:
        case ErrorCode::EmptyReview:
        case ErrorCode::NoReport: return kNothingToReport;
        case ErrorCode::IoError: return kIoError;
        case ErrorCode::InvalidArgument:
        case ErrorCode::EmptyExcerpt:
        case ErrorCode::EmptyComment:
        case ErrorCode::MissingQuestion: return kUsage;
        case ErrorCode::MissingBinding:
        case ErrorCode::UnknownPlaceholder: return kInternal;
    }
    return kInternal;
}

std::string read_file(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) {
        throw ar::Error(ar::ErrorCode::NotFound, "no such file: " + path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ar::Error(ar::ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream body;
    body << in.rdbuf();
    return body.str();
}

ar::CriteriaSet load_criteria(const std::string& spec) {
    if (spec == "default") return ar::default_criteria();
    const auto text = read_file(spec);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '<') return ar::import_xml(text);
    const auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded()) {
        throw ar::Error(ar::ErrorCode::InvalidCriterion, "criteria file is neither XML nor JSON: " + spec);
    }
    return ar::import_json(doc);
}

struct CommonOptions {
    std::string config;
    std::string backend;
    std::string fixtures;
    std::string data_root;
};

ar::EngineConfig make_config(const CommonOptions& o) {
    auto config = o.config.empty() ? ar::EngineConfig{} : ar::EngineConfig::load(o.config);
    if (!o.backend.empty()) config.llm.backend = o.backend;
    if (!o.fixtures.empty()) config.llm.mock_fixtures = o.fixtures;
    if (!o.data_root.empty()) config.data_root = o.data_root;
    config.validate();
    return config;
}

void print_summary(const ar::Review& review, std::ostream& out) {
    std::size_t width = std::string_view("Criterion").size();
    for (const auto& cr : review.criterion_reviews()) width = std::max(width, cr.criterion.name.size());
    out << std::left << std::setw(static_cast<int>(width)) << "Criterion" << "  " << std::right << std::setw(11)
        << "Annotations" << "  " << std::setw(9) << "Strengths" << "  " << std::setw(10) << "Weaknesses" << "\n";
    for (const auto& cr : review.criterion_reviews()) {
        std::size_t strengths = 0;
        std::size_t weaknesses = 0;
        const auto live = cr.live_annotations();
        for (const auto* a : live) {
            strengths += a->sentiment == ar::Sentiment::Strength;
            weaknesses += a->sentiment == ar::Sentiment::Weakness;
        }
        out << std::left << std::setw(static_cast<int>(width)) << cr.criterion.name << "  " << std::right
            << std::setw(11) << live.size() << "  " << std::setw(9) << strengths << "  " << std::setw(10)
            << weaknesses << "\n";
    }
}

struct RunOptions {
    std::string manuscript;
    std::string criteria = "default";
    std::string by = "by_criteria";
    std::string out = "review-report.html";
    int num_excerpts = 0;
    bool keep_session = false;
};

int run(const RunOptions& r, const CommonOptions& common) {
    const auto structure = ar::parse_report_structure(r.by);
    const auto bytes = read_file(r.manuscript);
    if (bytes.empty()) throw ar::Error(ar::ErrorCode::EmptyInput, "manuscript file is empty: " + r.manuscript);
    const auto criteria = load_criteria(r.criteria);

    ar::ReviewEngine engine(make_config(common));
    const auto sid = engine.create_session(bytes, ar::detect_source_kind(bytes));
    try {
        engine.set_criteria(sid, criteria);
        const auto n = r.num_excerpts > 0 ? std::optional<int>(r.num_excerpts) : std::nullopt;
        engine.annotate_all(sid, n);
        const auto annotated = engine.review(sid);
        for (const auto& cr : annotated.criterion_reviews()) {
            if (!cr.live_annotations().empty()) (void)engine.compile_criterion(sid, cr.criterion.name);
        }
        engine.build_report(sid, structure);
        const auto path = engine.export_report(sid, std::filesystem::path(r.out));
        print_summary(engine.review(sid), std::cout);
        std::cout << "\nReport written to " << path.string() << "\n";
        if (r.keep_session) {
            std::cout << "Session kept at " << engine.session_dir(sid).string() << "\n";
        } else {
            engine.end_session(sid);
        }
    } catch (...) {
        if (!r.keep_session && engine.is_active(sid)) engine.end_session(sid);
        throw;
    }
    return kOk;
}

std::atomic<ar::ApiServer*> g_server{nullptr};

void handle_signal(int) {
    if (auto* s = g_server.load()) s->stop();
}

int serve(const std::string& host, int port, const CommonOptions& common) {
    ar::ReviewEngine engine(make_config(common));
    ar::HttpApi api(engine);
    ar::ApiServer server(api);
    const int bound = server.bind(host, port);
    if (bound < 0) {
        std::cerr << "error: cannot bind " << host << ":" << port << "\n";
        return kIoError;
    }
    std::cout << "annoreview listening on http://" << host << ":" << bound << std::endl;
    g_server = &server;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    server.listen_after_bind();
    g_server = nullptr;
    for (const auto& sid : engine.sessions()) engine.end_session(sid);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Criterion-based manuscript review assistant"};
    app.require_subcommand(1);

    CommonOptions common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "Engine configuration file (JSON)");
        sub->add_option("--backend", common.backend, "LLM backend")->check(CLI::IsMember({"mock", "http"}));
        sub->add_option("--fixtures", common.fixtures, "Mock fixture file or directory");
        sub->add_option("--data-root", common.data_root, "Directory for session data");
    };

    RunOptions run_options;
    auto* run_cmd = app.add_subcommand("run", "Review one manuscript and write an HTML report");
    run_cmd->add_option("--manuscript", run_options.manuscript, "Manuscript file (PDF or UTF-8 text)")->required();
    run_cmd->add_option("--criteria", run_options.criteria, "Criteria file (XML or JSON) or 'default'");
    run_cmd->add_option("--by", run_options.by, "Report structure")
        ->check(CLI::IsMember({"by_criteria", "by_sentiment"}));
    run_cmd->add_option("--out", run_options.out, "Output HTML path");
    run_cmd->add_option("--num-excerpts", run_options.num_excerpts, "Excerpts per criterion")
        ->check(CLI::PositiveNumber);
    run_cmd->add_flag("--keep-session", run_options.keep_session, "Keep session data for debugging");
    add_common(run_cmd);

    std::string host = "127.0.0.1";
    int port = 8080;
    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
    serve_cmd->add_option("--host", host, "Address to bind");
    serve_cmd->add_option("--port", port, "Port to bind (0 picks a free one)")->check(CLI::Range(0, 65535));
    add_common(serve_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*run_cmd) return run(run_options, common);
        return serve(host, port, common);
    } catch (const ar::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: Internal: " << e.what() << "\n";
        return kInternal;
    }
}
