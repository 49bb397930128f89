#include "annoreview/document_store.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "annoreview/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace annoreview {

namespace {

void write_file(const fs::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

json ranges_to_json(const std::vector<IndexRange>& ranges) {
    json arr = json::array();
    for (const auto& r : ranges) arr.push_back({r.begin, r.end});
    return arr;
}

}  // namespace

std::string_view to_string(SourceKind kind) {
    return kind == SourceKind::Pdf ? "pdf" : "plain_text";
}

SourceKind parse_source_kind(std::string_view s) {
    if (s == "pdf" || s == "application/pdf") return SourceKind::Pdf;
    if (s == "plain_text" || s == "text" || s == "txt" || s == "text/plain") return SourceKind::PlainText;
    throw Error(ErrorCode::InvalidArgument, "unknown source kind '" + std::string(s) + "'");
}

int Manuscript::page_at(std::size_t raw_index) const {
    const auto it = std::upper_bound(page_map.begin(), page_map.end(), raw_index,
                                     [](std::size_t i, const PageSpan& p) { return i < p.raw_range.begin; });
    if (it == page_map.begin()) return page_map.empty() ? 1 : page_map.front().page;
    return std::prev(it)->page;
}

std::vector<std::string> extract_pages(std::string_view source_bytes, SourceKind kind, const PdfTextExtractor& pdf) {
    if (source_bytes.empty()) throw Error(ErrorCode::EmptyInput, "manuscript is empty");
    if (kind == SourceKind::Pdf) return pdf.extract_pages(source_bytes);

    std::string_view text = source_bytes;
    if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    if (!is_valid_utf8(text)) throw Error(ErrorCode::UnsupportedFormat, "plain text manuscript is not valid UTF-8");
    std::vector<std::string> pages;
    std::size_t start = 0;
    while (true) {
        const auto ff = text.find('\f', start);
        if (ff == std::string_view::npos) {
            pages.emplace_back(text.substr(start));
            break;
        }
        pages.emplace_back(text.substr(start, ff - start));
        start = ff + 1;
    }
    return pages;
}

Manuscript build_manuscript(const std::vector<std::string>& pages, SourceKind kind) {
    Manuscript m;
    m.source_kind = kind;
    for (std::size_t i = 0; i < pages.size(); ++i) {
        const std::size_t begin = m.raw_text.size();
        m.raw_text += utf8_to_u32(pages[i]);
        if (i + 1 < pages.size()) m.raw_text.push_back(U'\f');
        m.page_map.push_back({static_cast<int>(i + 1), {begin, m.raw_text.size()}});
    }
    m.normalized = normalize(m.raw_text);
    return m;
}

json manuscript_to_json(const Manuscript& m) {
    json pages = json::array();
    for (const auto& p : m.page_map) {
        pages.push_back({{"page", p.page}, {"start", p.raw_range.begin}, {"end", p.raw_range.end}});
    }
    return {
        {"session_id", m.session_id},
        {"source_kind", to_string(m.source_kind)},
        {"ingested_at", m.ingested_at},
        {"raw_text", m.raw_utf8()},
        {"normalized_text", u32_to_utf8(m.normalized.text)},
        {"page_map", std::move(pages)},
        {"norm_to_raw", ranges_to_json(m.normalized.norm_to_raw)},
        {"raw_to_norm", ranges_to_json(m.normalized.raw_to_norm)},
    };
}

std::string new_session_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    std::ostringstream oss;
    oss << std::hex << std::setfill('0') << std::setw(16) << rng() << std::setw(16) << rng();
    return oss.str();
}

DocumentStore::DocumentStore(fs::path data_root, std::shared_ptr<const PdfTextExtractor> pdf, Clock clock)
    : data_root_(std::move(data_root)), pdf_(std::move(pdf)), clock_(std::move(clock)) {
    std::error_code ec;
    fs::create_directories(data_root_, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create data root " + data_root_.string() + ": " + ec.message());
}

std::shared_ptr<const Manuscript> DocumentStore::ingest(std::string_view source_bytes, SourceKind kind) {
    auto manuscript = std::make_shared<Manuscript>(build_manuscript(extract_pages(source_bytes, kind, *pdf_), kind));
    manuscript->ingested_at = iso_timestamp(clock_());

    std::lock_guard lock(mutex_);
    std::string id;
    do {
        id = new_session_id();
    } while (sessions_.count(id) != 0);
    manuscript->session_id = id;

    const auto dir = session_dir(id);
    fs::create_directories(dir);
    try {
        write_file(dir / "manuscript.raw", source_bytes);
        write_file(dir / "text.json", manuscript_to_json(*manuscript).dump());
    } catch (...) {
        std::error_code ec;
        fs::remove_all(dir, ec);
        throw;
    }
    sessions_.emplace(id, manuscript);
    return manuscript;
}

std::shared_ptr<const Manuscript> DocumentStore::manuscript(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "no active session '" + session_id + "'");
    return it->second;
}

bool DocumentStore::is_active(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    return sessions_.count(session_id) != 0;
}

std::vector<std::string> DocumentStore::active_sessions() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, m] : sessions_) ids.push_back(id);
    return ids;
}

fs::path DocumentStore::session_dir(const std::string& session_id) const {
    return data_root_ / session_id;
}

void DocumentStore::end_session(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "no active session '" + session_id + "'");
    sessions_.erase(it);
    std::error_code ec;
    fs::remove_all(session_dir(session_id), ec);
    if (ec) throw Error(ErrorCode::IoError, "failed to purge session directory: " + ec.message());
}

}  // namespace annoreview
