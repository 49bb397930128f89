#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "annoreview/clock.hpp"
#include "annoreview/normalize.hpp"
#include "annoreview/pdf_text.hpp"
#include "annoreview/text.hpp"

namespace annoreview {

enum class SourceKind { PlainText, Pdf };

[[nodiscard]] std::string_view to_string(SourceKind kind);
/// Accepts "plain_text"/"text"/"txt" and "pdf". Throws InvalidArgument.
[[nodiscard]] SourceKind parse_source_kind(std::string_view s);

struct PageSpan {
    int page = 1;
    IndexRange raw_range;

    friend bool operator==(const PageSpan&, const PageSpan&) = default;
};

/// Extracted manuscript text. Immutable once ingested; all offsets are code
/// point indices into `raw_text`.
struct Manuscript {
    std::string session_id;
    SourceKind source_kind = SourceKind::PlainText;
    std::u32string raw_text;
    NormalizedText normalized;
    std::vector<PageSpan> page_map;
    std::string ingested_at;

    [[nodiscard]] int page_at(std::size_t raw_index) const;
    [[nodiscard]] std::string raw_utf8() const { return u32_to_utf8(raw_text); }
    [[nodiscard]] std::string raw_slice(IndexRange range) const { return utf8_slice(raw_text, range); }
};

/// Builds a manuscript from per-page UTF-8 text. Pages are joined with a
/// form feed, which belongs to the preceding page's range.
[[nodiscard]] Manuscript build_manuscript(const std::vector<std::string>& pages, SourceKind kind);

/// Decodes source bytes into pages. Plain text must be UTF-8 and is split
/// on form feeds; PDFs go through the extractor.
[[nodiscard]] std::vector<std::string> extract_pages(std::string_view source_bytes, SourceKind kind,
                                                     const PdfTextExtractor& pdf);

/// text.json payload: raw_text, normalized_text, page_map and both offset
/// maps as arrays of [begin, end) pairs.
[[nodiscard]] nlohmann::json manuscript_to_json(const Manuscript& m);

/// Session-scoped manuscript storage under `<data_root>/<session_id>/`.
class DocumentStore {
public:
    explicit DocumentStore(std::filesystem::path data_root,
                           std::shared_ptr<const PdfTextExtractor> pdf = default_pdf_extractor(),
                           Clock clock = system_clock());

    /// Extracts, normalizes and persists the manuscript under a new session.
    std::shared_ptr<const Manuscript> ingest(std::string_view source_bytes, SourceKind kind);

    /// Throws UnknownSession once the session has ended.
    [[nodiscard]] std::shared_ptr<const Manuscript> manuscript(const std::string& session_id) const;

    [[nodiscard]] bool is_active(const std::string& session_id) const;
    [[nodiscard]] std::vector<std::string> active_sessions() const;
    [[nodiscard]] std::filesystem::path session_dir(const std::string& session_id) const;
    [[nodiscard]] const std::filesystem::path& data_root() const { return data_root_; }

    /// Erases the session directory and everything in it.
    void end_session(const std::string& session_id);

private:
    std::filesystem::path data_root_;
    std::shared_ptr<const PdfTextExtractor> pdf_;
    Clock clock_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const Manuscript>> sessions_;
};

[[nodiscard]] std::string new_session_id();

}  // namespace annoreview
