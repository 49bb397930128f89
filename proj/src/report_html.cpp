#include <sstream>

#include "annoreview/engine.hpp"
#include "annoreview/text.hpp"

namespace annoreview {

namespace {

constexpr std::string_view kNeutralAccent = "#9e9e9e";

constexpr std::string_view kStyle = R"(
body { font-family: Georgia, 'Times New Roman', serif; max-width: 46em; margin: 2em auto; padding: 0 1em; color: #222; line-height: 1.55; }
h1 { font-size: 1.7em; margin-bottom: 0.2em; }
.meta { color: #666; font-size: 0.9em; margin-top: 0; }
section { margin: 1.8em 0; padding-left: 0.9em; }
h2 { font-size: 1.3em; padding-bottom: 0.2em; margin-bottom: 0.6em; }
blockquote { margin: 0.8em 0; padding: 0.5em 0.9em; background: #f6f6f6; border-left: 4px solid #9e9e9e; }
blockquote p { margin: 0; font-style: italic; }
.cite { display: block; margin-top: 0.35em; color: #555; font-size: 0.85em; font-style: normal; }
.preamble { padding-left: 0; }
)";

// XML-safe text: markup characters escaped, control characters other than
// tab and newline dropped.
std::string escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        const auto u = static_cast<unsigned char>(c);
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&#39;"; break;
            default:
                if (u < 0x20 && c != '\n' && c != '\t') break;
                out.push_back(c);
        }
    }
    return out;
}

// Blank lines separate paragraphs; single newlines become line breaks.
void write_paragraphs(std::ostringstream& out, std::string_view text) {
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto next = text.find("\n\n", pos);
        if (next == std::string_view::npos) next = text.size();
        const auto para = trim(text.substr(pos, next - pos));
        if (!para.empty()) {
            out << "<p>";
            std::size_t line_start = 0;
            while (true) {
                const auto nl = para.find('\n', line_start);
                out << escape(std::string_view(para).substr(line_start, nl - line_start));
                if (nl == std::string::npos) break;
                out << "<br />";
                line_start = nl + 1;
            }
            out << "</p>\n";
        }
        pos = next + 2;
    }
}

std::string color_of(const Review& review, std::string_view criterion) {
    for (const auto& cr : review.criterion_reviews()) {
        if (criterion_key(cr.criterion.name) == criterion_key(criterion)) return cr.criterion.color.hex();
    }
    return std::string(kNeutralAccent);
}

void write_quote(std::ostringstream& out, const Review& review, const Annotation& a, bool with_criterion) {
    const auto color = color_of(review, a.criterion_name);
    out << "<blockquote data-annotation=\"" << escape(a.id) << "\" data-color=\"" << color
        << "\" style=\"border-left-color: " << color << ";\">";
    out << "<p>" << escape(a.excerpt) << "</p>";
    out << "<span class=\"cite\">";
    if (with_criterion) out << escape(a.criterion_name) << ", ";
    out << (a.anchor.page ? "page " + std::to_string(*a.anchor.page) : std::string("page unknown")) << ", "
        << to_string(a.sentiment) << "</span>";
    out << "</blockquote>\n";
}

void write_structured(std::ostringstream& out, const Review& review, const ReviewReport& report) {
    const bool by_criteria = report.structure == ReportStructure::ByCriteria;
    if (report.preamble && !report.preamble->empty()) {
        out << "<section class=\"preamble\">\n";
        write_paragraphs(out, *report.preamble);
        out << "</section>\n";
    }
    for (const auto& s : report.sections) {
        const auto accent = by_criteria ? color_of(review, s.heading) : std::string(kNeutralAccent);
        out << "<section class=\"" << (by_criteria ? "criterion" : "sentiment") << "\" data-heading=\""
            << escape(s.heading) << "\"";
        if (by_criteria) out << " data-color=\"" << accent << "\"";
        out << " style=\"border-left: 6px solid " << accent << ";\">\n";
        out << "<h2 style=\"border-bottom: 3px solid " << accent << ";\">" << escape(s.heading) << "</h2>\n";
        write_paragraphs(out, s.summary);
        for (const auto& id : s.cited_annotation_ids) write_quote(out, review, review.annotation(id), !by_criteria);
        out << "</section>\n";
    }
}

// The reviewer edited the body: render their text, with "## " lines as
// section headings.
void write_edited(std::ostringstream& out, const Review& review, std::string_view body) {
    std::vector<std::pair<std::string, std::string>> blocks{{"", ""}};
    std::size_t pos = 0;
    while (pos <= body.size()) {
        auto nl = body.find('\n', pos);
        if (nl == std::string_view::npos) nl = body.size();
        const auto line = body.substr(pos, nl - pos);
        if (line.substr(0, 3) == "## ") {
            blocks.emplace_back(trim(line.substr(3)), "");
        } else {
            blocks.back().second += std::string(line) + "\n";
        }
        pos = nl + 1;
    }
    for (const auto& [heading, text] : blocks) {
        if (heading.empty()) {
            if (trim(text).empty()) continue;
            out << "<section class=\"preamble\">\n";
            write_paragraphs(out, text);
            out << "</section>\n";
            continue;
        }
        const auto accent = color_of(review, heading);
        out << "<section class=\"edited\" data-heading=\"" << escape(heading) << "\" style=\"border-left: 6px solid "
            << accent << ";\">\n";
        out << "<h2 style=\"border-bottom: 3px solid " << accent << ";\">" << escape(heading) << "</h2>\n";
        write_paragraphs(out, text);
        out << "</section>\n";
    }
}

}  // namespace

std::string render_report_html(const Review& review, const ReviewReport& report) {
    std::ostringstream out;
    out << "<!DOCTYPE html>\n";
    out << "<html xmlns=\"http://www.w3.org/1999/xhtml\" lang=\"en\">\n<head>\n";
    out << "<meta charset=\"utf-8\" />\n<title>Review report</title>\n";
    out << "<style>" << kStyle << "</style>\n</head>\n<body>\n";
    out << "<h1>Review report</h1>\n";
    out << "<p class=\"meta\">Organized by "
        << (report.structure == ReportStructure::ByCriteria ? "review criteria" : "sentiment") << ". Generated "
        << escape(report.generated_at) << ".</p>\n";
    if (report.editable_body == compose_report_body(report)) {
        write_structured(out, review, report);
    } else {
        write_edited(out, review, report.editable_body);
    }
    out << "</body>\n</html>\n";
    return out.str();
}

}  // namespace annoreview
