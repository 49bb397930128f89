#include "annoreview/http_api.hpp"

#include <httplib.h>
#include <json.hpp>

#include "annoreview/text.hpp"

using nlohmann::json;

namespace annoreview {

namespace {

ApiResponse json_response(int status, const json& body) {
    return {status, "application/json", body.dump()};
}

ApiResponse error_response(int status, std::string_view code, const std::string& message) {
    return json_response(status, {{"error", {{"code", code}, {"message", message}}}});
}

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> segments;
    std::size_t pos = 0;
    while (pos < path.size()) {
        if (path[pos] == '/') {
            ++pos;
            continue;
        }
        auto end = path.find('/', pos);
        if (end == std::string_view::npos) end = path.size();
        segments.push_back(httplib::detail::decode_url(std::string(path.substr(pos, end - pos)), false));
        pos = end;
    }
    return segments;
}

json parse_body(const ApiRequest& request) {
    if (trim(request.body).empty()) return json::object();
    json doc = json::parse(request.body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
    }
    return doc;
}

json annotations_json(const std::vector<Annotation>& list) {
    json out = json::array();
    for (const auto& a : list) out.push_back(annotation_to_json(a));
    return out;
}

template <typename T>
std::optional<T> optional_field(const json& body, const char* key) {
    if (!body.contains(key) || body.at(key).is_null()) return std::nullopt;
    try {
        return body.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::InvalidArgument, std::string("field '") + key + "' has the wrong type");
    }
}

std::optional<int> num_excerpts_field(const json& body) {
    auto n = optional_field<int>(body, "num_excerpts");
    if (n && *n < 1) throw Error(ErrorCode::InvalidArgument, "num_excerpts must be at least 1");
    return n;
}

bool looks_like_xml(const ApiRequest& r) {
    if (r.content_type.find("xml") != std::string::npos) return true;
    const auto body = trim(r.body);
    return !body.empty() && body.front() == '<';
}

struct MethodNotAllowed {};

}  // namespace

int http_status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownSession:
        case ErrorCode::UnknownCriterion:
        case ErrorCode::UnknownAnnotation:
        case ErrorCode::NotFound: return 404;
        case ErrorCode::UnsupportedFormat: return 415;
        case ErrorCode::NoAnnotations:
        case ErrorCode::EmptyReview:
        case ErrorCode::NoReport: return 409;
        case ErrorCode::Timeout: return 504;
        case ErrorCode::RateLimited: return 503;
        case ErrorCode::AuthFailure:
        case ErrorCode::BackendError:
        case ErrorCode::UnparseableResponse:
        case ErrorCode::EmptyItems: return 502;
        case ErrorCode::MissingBinding:
        case ErrorCode::UnknownPlaceholder:
        case ErrorCode::IoError: return 500;
        case ErrorCode::EmptyInput:
        case ErrorCode::EmptyExcerpt:
        case ErrorCode::EmptyComment:
        case ErrorCode::InvalidArgument:
        case ErrorCode::MalformedXml:
        case ErrorCode::DuplicateName:
        case ErrorCode::DuplicateColor:
        case ErrorCode::EmptyCriteria:
        case ErrorCode::TooManyCriteria:
        case ErrorCode::InvalidCriterion:
        case ErrorCode::MissingQuestion: return 400;
    }
    return 500;
}

ApiResponse HttpApi::handle(const ApiRequest& request) {
    const auto seg = split_path(request.path);
    const auto& m = request.method;
    auto only = [&](std::string_view method) {
        if (m != method) throw MethodNotAllowed{};
    };
    try {
        if (seg.empty() || seg[0] != "sessions") return error_response(404, "NotFound", "no such endpoint");

        if (seg.size() == 1) {
            only("POST");
            std::string bytes;
            std::optional<std::string> kind;
            if (const auto it = request.parts.find("manuscript"); it != request.parts.end()) {
                bytes = it->second.content;
                if (const auto k = request.parts.find("source_kind"); k != request.parts.end()) {
                    kind = trim(k->second.content);
                }
            } else {
                bytes = request.body;
            }
            if (const auto q = request.query.find("source_kind"); !kind && q != request.query.end()) kind = q->second;
            if (bytes.empty()) throw Error(ErrorCode::EmptyInput, "no manuscript uploaded");
            const auto source = kind && !kind->empty() ? parse_source_kind(*kind) : detect_source_kind(bytes);
            return json_response(201, {{"session_id", engine_.create_session(bytes, source)}});
        }

        const std::string& sid = seg[1];
        if (seg.size() == 2) {
            only("DELETE");
            engine_.end_session(sid);
            return {204, "application/json", ""};
        }

        const std::string& resource = seg[2];
        if (resource == "text" && seg.size() == 3) {
            only("GET");
            const auto ms = engine_.manuscript(sid);
            json pages = json::array();
            for (const auto& p : ms->page_map) {
                pages.push_back({{"page", p.page}, {"start", p.raw_range.begin}, {"end", p.raw_range.end}});
            }
            return json_response(200, {{"raw_text", ms->raw_utf8()},
                                       {"source_kind", to_string(ms->source_kind)},
                                       {"page_map", std::move(pages)}});
        }

        if (resource == "criteria" && seg.size() == 3) {
            if (m == "GET") {
                const auto set = engine_.criteria(sid);
                const auto f = request.query.find("format");
                if (f != request.query.end() && f->second == "xml") return {200, "application/xml", export_xml(set)};
                return json_response(200, export_json(set));
            }
            only("PUT");
            CriteriaSet set;
            if (looks_like_xml(request)) {
                set = import_xml(request.body);
            } else {
                const json doc = json::parse(request.body, nullptr, false);
                if (doc.is_discarded()) throw Error(ErrorCode::InvalidArgument, "criteria body is neither XML nor JSON");
                set = import_json(doc);
            }
            return json_response(200, export_json(engine_.set_criteria(sid, set)));
        }

        if (resource == "criteria" && seg.size() == 5) {
            const std::string& name = seg[3];
            const std::string& action = seg[4];
            if (action == "recap") {
                only("GET");
                const auto r = engine_.recap(sid, name);
                return json_response(200, {{"criterion", r.criterion},
                                           {"text", r.render()},
                                           {"item_count", r.item_count()},
                                           {"annotations", annotations_json(r.annotations)},
                                           {"compilation", r.compilation ? json(*r.compilation) : json(nullptr)},
                                           {"viewpoints", r.viewpoints ? json(*r.viewpoints) : json(nullptr)}});
            }
            only("POST");
            const auto body = parse_body(request);
            if (action == "annotate") {
                const auto added = engine_.annotate_criterion(sid, name, num_excerpts_field(body));
                return json_response(200, {{"annotations", annotations_json(added)}});
            }
            if (action == "compile") {
                const auto text = engine_.compile_criterion(sid, name);
                return json_response(200, {{"criterion", engine_.recap(sid, name).criterion}, {"compilation", text}});
            }
            if (action == "viewpoints") {
                const auto text = engine_.viewpoints_criterion(sid, name);
                return json_response(200, {{"criterion", engine_.recap(sid, name).criterion}, {"viewpoints", text}});
            }
            return error_response(404, "NotFound", "no such endpoint");
        }

        if (resource == "annotations" && seg.size() == 3) {
            if (m == "GET") {
                const auto q = request.query.find("include_deleted");
                const bool all = q != request.query.end() && (q->second == "true" || q->second == "1");
                return json_response(200, {{"annotations", annotations_json(engine_.annotations(sid, all))}});
            }
            only("POST");
            const auto body = parse_body(request);
            HumanAnnotation h;
            h.criterion = optional_field<std::string>(body, "criterion").value_or("");
            const auto start = optional_field<std::size_t>(body, "start");
            const auto end = optional_field<std::size_t>(body, "end");
            if (start.has_value() != end.has_value()) {
                throw Error(ErrorCode::InvalidArgument, "give both start and end");
            }
            if (start) h.raw_range = IndexRange{*start, *end};
            h.excerpt = optional_field<std::string>(body, "excerpt");
            if (const auto s = optional_field<std::string>(body, "sentiment")) h.sentiment = parse_sentiment(*s);
            h.comment = optional_field<std::string>(body, "comment");
            return json_response(201, annotation_to_json(engine_.add_human_annotation(sid, h)));
        }

        if (resource == "annotations" && seg.size() == 4) {
            only("PATCH");
            const std::string& aid = seg[3];
            const auto body = parse_body(request);
            std::optional<Annotation> result;
            if (const auto s = optional_field<std::string>(body, "sentiment")) {
                result = engine_.update_sentiment(sid, aid, parse_sentiment(*s));
            }
            if (const auto f = optional_field<std::string>(body, "feedback")) {
                result = engine_.set_relevance_feedback(sid, aid, parse_relevance_feedback(*f));
            }
            if (body.contains("saved_output") && !body.at("saved_output").is_null()) {
                const auto& so = body.at("saved_output");
                if (!so.is_object()) throw Error(ErrorCode::InvalidArgument, "saved_output must be an object");
                const auto kind = optional_field<std::string>(so, "kind");
                const auto answer = optional_field<std::string>(so, "answer");
                if (!kind || !answer) throw Error(ErrorCode::InvalidArgument, "saved_output needs kind and answer");
                result = engine_.save_output(sid, aid, parse_followup_kind(*kind),
                                             optional_field<std::string>(so, "question"), *answer);
            }
            if (const auto d = optional_field<bool>(body, "deleted"); d && *d) {
                result = engine_.remove_annotation(sid, aid);
            }
            if (!result) result = engine_.annotation(sid, aid);
            return json_response(200, annotation_to_json(*result));
        }

        if (resource == "annotations" && seg.size() == 5) {
            only("POST");
            const std::string& aid = seg[3];
            const auto body = parse_body(request);
            if (seg[4] == "followup") {
                const auto kind = optional_field<std::string>(body, "kind");
                if (!kind) throw Error(ErrorCode::InvalidArgument, "followup needs a kind");
                const auto fk = parse_followup_kind(*kind);
                const auto question = optional_field<std::string>(body, "question");
                const auto answer = engine_.annotation_followup(sid, aid, fk, question);
                return json_response(200, {{"annotation_id", aid},
                                           {"kind", to_string(fk)},
                                           {"question", question ? json(*question) : json(nullptr)},
                                           {"answer", answer}});
            }
            if (seg[4] == "comments") {
                const auto comment = optional_field<std::string>(body, "comment").value_or("");
                return json_response(201, annotation_to_json(engine_.add_comment(sid, aid, comment)));
            }
            return error_response(404, "NotFound", "no such endpoint");
        }

        if (resource == "report" && seg.size() == 3) {
            only("POST");
            const auto body = parse_body(request);
            const auto structure = optional_field<std::string>(body, "structure");
            const auto edited = optional_field<std::string>(body, "editable_body");
            if (!structure && !edited) throw Error(ErrorCode::InvalidArgument, "give a structure or an editable_body");
            std::optional<ReviewReport> report;
            if (structure) report = engine_.build_report(sid, parse_report_structure(*structure));
            if (edited) report = engine_.update_report_body(sid, *edited);
            return json_response(200, report_to_json(*report));
        }

        if (resource == "report.html" && seg.size() == 3) {
            only("GET");
            return {200, "text/html; charset=utf-8", engine_.export_report_html(sid)};
        }

        return error_response(404, "NotFound", "no such endpoint");
    } catch (const MethodNotAllowed&) {
        return error_response(405, "MethodNotAllowed", m + " is not supported on " + request.path);
    } catch (const Error& e) {
        return error_response(http_status_for(e.code()), to_string(e.code()), e.what());
    } catch (const std::exception& e) {
        return error_response(500, "Internal", e.what());
    }
}

// --- server ------------------------------------------------------------------

struct ApiServer::Impl {
    HttpApi& api;
    httplib::Server server;

    explicit Impl(HttpApi& a) : api(a) {
        auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
            ApiRequest r;
            r.method = req.method;
            const auto q = req.target.find('?');
            r.path = q == std::string::npos ? req.target : req.target.substr(0, q);
            for (const auto& [k, v] : req.params) r.query[k] = v;
            r.content_type = req.get_header_value("Content-Type");
            r.body = req.body;
            for (const auto& [name, file] : req.files) {
                r.parts[name] = ApiFile{file.filename, file.content_type, file.content};
            }
            const auto out = api.handle(r);
            res.status = out.status;
            if (out.status != 204) res.set_content(out.body, out.content_type);
        };
        const std::string any = ".*";
        server.Get(any, dispatch);
        server.Post(any, dispatch);
        server.Put(any, dispatch);
        server.Patch(any, dispatch);
        server.Delete(any, dispatch);
        server.set_payload_max_length(64ull * 1024 * 1024);
    }
};

ApiServer::ApiServer(HttpApi& api) : impl_(std::make_unique<Impl>(api)) {}
ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool ApiServer::listen_after_bind() { return impl_->server.listen_after_bind(); }
void ApiServer::stop() { impl_->server.stop(); }
void ApiServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace annoreview
