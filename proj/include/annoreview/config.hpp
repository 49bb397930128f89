#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

namespace annoreview {

enum class AutoPick { None, Earliest };

struct AnchorConfig {
    double max_ratio = 0.2;
    double ambiguity_band = 0.02;
    /// `earliest` resolves ambiguous excerpts to their first occurrence.
    AutoPick auto_pick = AutoPick::None;
};

struct LlmConfig {
    /// "mock" or "http".
    std::string backend = "mock";
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    /// Name of the environment variable holding the API key.
    std::string api_key_env = "ANNOREVIEW_API_KEY";
    std::string model_name = "gpt-4";
    /// Fixture file or directory for the mock backend.
    std::optional<std::filesystem::path> mock_fixtures;
    double temperature = 0.0;
    int max_retries = 2;
    double timeout_seconds = 60.0;
    int backoff_ms = 500;
    std::size_t max_concurrency = 4;
    int max_output_tokens = 1024;
};

struct PromptConfig {
    /// Directory of `<template>.txt` overrides.
    std::optional<std::filesystem::path> directory;
    std::size_t manuscript_char_budget = 120000;
};

struct EngineConfig {
    std::filesystem::path data_root = "annoreview-data";
    std::filesystem::path export_root = "annoreview-exports";
    int num_excerpts_default = 3;
    AnchorConfig anchor;
    LlmConfig llm;
    PromptConfig prompts;

    /// Throws InvalidArgument naming the offending key.
    void validate() const;

    /// Missing keys keep their defaults. Relative paths resolve against
    /// `base_dir`.
    [[nodiscard]] static EngineConfig from_json(const nlohmann::json& doc,
                                                const std::filesystem::path& base_dir = {});
    /// Throws NotFound or InvalidArgument.
    [[nodiscard]] static EngineConfig load(const std::filesystem::path& path);
    [[nodiscard]] nlohmann::json to_json() const;
};

}  // namespace annoreview
