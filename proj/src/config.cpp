#include "annoreview/config.hpp"

#include <fstream>

#include "annoreview/error.hpp"

using nlohmann::json;

namespace annoreview {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) return base / path;
    return path;
}

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> known, std::string_view where) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (auto k : known) ok = ok || k == key;
        if (!ok) {
            throw Error(ErrorCode::InvalidArgument, "unknown config key '" + std::string(where) + key + "'");
        }
    }
}

}  // namespace

void EngineConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "config: " + what); };
    if (num_excerpts_default < 1) fail("num_excerpts_default must be >= 1");
    if (!(anchor.max_ratio >= 0.0 && anchor.max_ratio < 1.0)) fail("anchor.max_ratio must be in [0, 1)");
    if (!(anchor.ambiguity_band >= 0.0)) fail("anchor.ambiguity_band must be >= 0");
    if (llm.backend != "mock" && llm.backend != "http") fail("llm.backend must be 'mock' or 'http'");
    if (!(llm.temperature >= 0.0)) fail("llm.temperature must be >= 0");
    if (llm.max_retries < 0) fail("llm.max_retries must be >= 0");
    if (!(llm.timeout_seconds > 0.0)) fail("llm.timeout_seconds must be > 0");
    if (llm.backoff_ms < 0) fail("llm.backoff_ms must be >= 0");
    if (llm.max_concurrency < 1) fail("llm.max_concurrency must be >= 1");
    if (llm.max_output_tokens < 1) fail("llm.max_output_tokens must be >= 1");
    if (prompts.manuscript_char_budget < 1000) fail("prompts.manuscript_char_budget must be >= 1000");
    if (data_root.empty()) fail("data_root must be set");
    if (export_root.empty()) fail("export_root must be set");
}

EngineConfig EngineConfig::from_json(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
    EngineConfig c;
    try {
        reject_unknown_keys(doc, {"data_root", "export_root", "num_excerpts_default", "anchor", "llm", "prompts"}, "");
        if (doc.contains("data_root")) c.data_root = resolve(base_dir, doc.at("data_root").get<std::string>());
        if (doc.contains("export_root")) c.export_root = resolve(base_dir, doc.at("export_root").get<std::string>());
        c.num_excerpts_default = doc.value("num_excerpts_default", c.num_excerpts_default);

        if (doc.contains("anchor")) {
            const auto& a = doc.at("anchor");
            reject_unknown_keys(a, {"max_ratio", "ambiguity_band", "auto_pick"}, "anchor.");
            c.anchor.max_ratio = a.value("max_ratio", c.anchor.max_ratio);
            c.anchor.ambiguity_band = a.value("ambiguity_band", c.anchor.ambiguity_band);
            const auto pick = a.value("auto_pick", std::string("none"));
            if (pick == "earliest") {
                c.anchor.auto_pick = AutoPick::Earliest;
            } else if (pick == "none") {
                c.anchor.auto_pick = AutoPick::None;
            } else {
                throw Error(ErrorCode::InvalidArgument, "config: anchor.auto_pick must be 'none' or 'earliest'");
            }
        }

        if (doc.contains("llm")) {
            const auto& l = doc.at("llm");
            reject_unknown_keys(l,
                                {"backend", "endpoint", "api_key_env", "model_name", "mock_fixtures", "temperature",
                                 "max_retries", "timeout_seconds", "backoff_ms", "max_concurrency",
                                 "max_output_tokens"},
                                "llm.");
            c.llm.backend = l.value("backend", c.llm.backend);
            c.llm.endpoint = l.value("endpoint", c.llm.endpoint);
            c.llm.api_key_env = l.value("api_key_env", c.llm.api_key_env);
            c.llm.model_name = l.value("model_name", c.llm.model_name);
            if (l.contains("mock_fixtures") && !l.at("mock_fixtures").is_null()) {
                c.llm.mock_fixtures = resolve(base_dir, l.at("mock_fixtures").get<std::string>());
            }
            c.llm.temperature = l.value("temperature", c.llm.temperature);
            c.llm.max_retries = l.value("max_retries", c.llm.max_retries);
            c.llm.timeout_seconds = l.value("timeout_seconds", c.llm.timeout_seconds);
            c.llm.backoff_ms = l.value("backoff_ms", c.llm.backoff_ms);
            c.llm.max_concurrency = l.value("max_concurrency", c.llm.max_concurrency);
            c.llm.max_output_tokens = l.value("max_output_tokens", c.llm.max_output_tokens);
        }

        if (doc.contains("prompts")) {
            const auto& p = doc.at("prompts");
            reject_unknown_keys(p, {"directory", "manuscript_char_budget"}, "prompts.");
            if (p.contains("directory") && !p.at("directory").is_null()) {
                c.prompts.directory = resolve(base_dir, p.at("directory").get<std::string>());
            }
            c.prompts.manuscript_char_budget = p.value("manuscript_char_budget", c.prompts.manuscript_char_budget);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

EngineConfig EngineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::NotFound, "config file not found: " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::InvalidArgument, "config file is not valid JSON: " + path.string());
    return from_json(doc, path.parent_path());
}

json EngineConfig::to_json() const {
    return {
        {"data_root", data_root.string()},
        {"export_root", export_root.string()},
        {"num_excerpts_default", num_excerpts_default},
        {"anchor",
         {{"max_ratio", anchor.max_ratio},
          {"ambiguity_band", anchor.ambiguity_band},
          {"auto_pick", anchor.auto_pick == AutoPick::Earliest ? "earliest" : "none"}}},
        {"llm",
         {{"backend", llm.backend},
          {"endpoint", llm.endpoint},
          {"api_key_env", llm.api_key_env},
          {"model_name", llm.model_name},
          {"mock_fixtures", llm.mock_fixtures ? json(llm.mock_fixtures->string()) : json(nullptr)},
          {"temperature", llm.temperature},
          {"max_retries", llm.max_retries},
          {"timeout_seconds", llm.timeout_seconds},
          {"backoff_ms", llm.backoff_ms},
          {"max_concurrency", llm.max_concurrency},
          {"max_output_tokens", llm.max_output_tokens}}},
        {"prompts",
         {{"directory", prompts.directory ? json(prompts.directory->string()) : json(nullptr)},
          {"manuscript_char_budget", prompts.manuscript_char_budget}}},
    };
}

}  // namespace annoreview
