#pragma once

#include <map>
#include <memory>
#include <string>

#include "annoreview/engine.hpp"
#include "annoreview/error.hpp"

namespace annoreview {

struct ApiFile {
    std::string filename;
    std::string content_type;
    std::string content;
};

/// Transport-neutral request. `path` is still percent-encoded.
struct ApiRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string content_type;
    std::string body;
    /// Multipart form parts by field name.
    std::map<std::string, ApiFile> parts;
};

struct ApiResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

/// HTTP status for an engine error.
[[nodiscard]] int http_status_for(ErrorCode code);

/// Routes requests onto the engine. JSON in and out; errors come back as
/// {"error": {"code", "message"}}.
class HttpApi {
public:
    explicit HttpApi(ReviewEngine& engine) : engine_(engine) {}

    [[nodiscard]] ApiResponse handle(const ApiRequest& request);

private:
    ReviewEngine& engine_;
};

/// Serves an HttpApi over cpp-httplib.
class ApiServer {
public:
    explicit ApiServer(HttpApi& api);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Returns the bound port, or -1.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    bool listen_after_bind();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace annoreview
