#include "annoreview/criteria.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <set>
#include <sstream>

#include "annoreview/error.hpp"
#include "annoreview/normalize.hpp"
#include "annoreview/text.hpp"

namespace pt = boost::property_tree;
using nlohmann::json;

namespace annoreview {

namespace {

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

bool has_control_chars(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x20; });
}

std::string xml_escape(std::string_view s, bool attribute) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += attribute ? "&quot;" : "\""; break;
            case '\'': out += attribute ? "&apos;" : "'"; break;
            case '\r': out += "&#13;"; break;
            case '\n': out += attribute ? "&#10;" : "\n"; break;
            case '\t': out += attribute ? "&#9;" : "\t"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

const std::string kAttr = "<xmlattr>";
const std::string kComment = "<xmlcomment>";

}  // namespace

Color Color::parse(std::string_view hex) {
    if (hex.size() != 7 || hex[0] != '#') {
        throw Error(ErrorCode::InvalidCriterion, "color must be #rrggbb, got '" + std::string(hex) + "'");
    }
    std::uint8_t parts[3];
    for (int i = 0; i < 3; ++i) {
        const int hi = hex_digit(hex[1 + 2 * i]);
        const int lo = hex_digit(hex[2 + 2 * i]);
        if (hi < 0 || lo < 0) {
            throw Error(ErrorCode::InvalidCriterion, "color must be #rrggbb, got '" + std::string(hex) + "'");
        }
        parts[i] = static_cast<std::uint8_t>(hi * 16 + lo);
    }
    return {parts[0], parts[1], parts[2]};
}

std::string Color::hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s = "#";
    for (std::uint8_t v : {r, g, b}) {
        s.push_back(digits[v >> 4]);
        s.push_back(digits[v & 0xF]);
    }
    return s;
}

const std::array<Color, 16>& default_palette() {
    static const std::array<Color, 16> palette{
        Color::parse("#ffd600"),  // yellow
        Color::parse("#4caf50"),  // green
        Color::parse("#2196f3"),  // blue
        Color::parse("#f44336"),  // red
        Color::parse("#ff9800"),  // orange
        Color::parse("#9c27b0"),  // purple
        Color::parse("#00bcd4"),  // cyan
        Color::parse("#e91e63"),  // pink
        Color::parse("#8bc34a"),  // light green
        Color::parse("#3f51b5"),  // indigo
        Color::parse("#795548"),  // brown
        Color::parse("#607d8b"),  // blue grey
        Color::parse("#009688"),  // teal
        Color::parse("#cddc39"),  // lime
        Color::parse("#ff5722"),  // deep orange
        Color::parse("#673ab7"),  // deep purple
    };
    return palette;
}

std::string criterion_key(std::string_view name) { return normalize_utf8(name); }

CriteriaSet CriteriaSet::create(std::vector<Draft> drafts) {
    if (drafts.empty()) throw Error(ErrorCode::EmptyCriteria, "at least one criterion is required");
    if (drafts.size() > kMaxCriteria) {
        throw Error(ErrorCode::TooManyCriteria,
                    "at most " + std::to_string(kMaxCriteria) + " criteria are supported, got " +
                        std::to_string(drafts.size()));
    }

    std::set<std::string> names;
    std::set<std::string> colors;
    for (auto& d : drafts) {
        d.name = trim(d.name);
        d.description = trim(d.description);
        if (d.name.empty() || has_control_chars(d.name)) {
            throw Error(ErrorCode::InvalidCriterion, "criterion name must be non-empty single-line text");
        }
        if (d.description.empty()) {
            throw Error(ErrorCode::InvalidCriterion, "criterion '" + d.name + "' has an empty description");
        }
        if (!names.insert(criterion_key(d.name)).second) {
            throw Error(ErrorCode::DuplicateName, "duplicate criterion name '" + d.name + "'");
        }
        if (d.color && !colors.insert(d.color->hex()).second) {
            throw Error(ErrorCode::DuplicateColor, "duplicate color " + d.color->hex());
        }
    }

    CriteriaSet set;
    std::size_t next_palette = 0;
    for (auto& d : drafts) {
        Criterion c;
        c.name = std::move(d.name);
        c.description = std::move(d.description);
        for (auto& rec : d.recommendations) {
            auto r = trim(rec);
            if (!r.empty()) c.recommendations.push_back(std::move(r));
        }
        if (d.color) {
            c.color = *d.color;
        } else {
            const auto& palette = default_palette();
            while (colors.count(palette[next_palette].hex()) != 0) ++next_palette;
            c.color = palette[next_palette];
            colors.insert(c.color.hex());
        }
        set.criteria_.push_back(std::move(c));
    }
    return set;
}

const Criterion* CriteriaSet::find(std::string_view name) const {
    const auto key = criterion_key(name);
    for (const auto& c : criteria_) {
        if (criterion_key(c.name) == key) return &c;
    }
    return nullptr;
}

CriteriaSet default_criteria() {
    const auto& p = default_palette();
    return CriteriaSet::create({
        {"Contribution",
         "How much the manuscript advances the field: the new results, artifacts or insights it delivers and "
         "how significant they are for researchers and practitioners.",
         {"Identify the explicit contribution statements and check that each one is substantiated later in the "
          "manuscript."},
         p[2]},
        {"Originality",
         "The novelty of the problem, approach or results with respect to prior work, and how clearly the "
         "manuscript positions itself against the related literature.",
         {"Look for explicit comparisons with related work.", "Flag claims of novelty that lack supporting references."},
         p[1]},
        {"Relevance",
         "The importance of the addressed problem for the field and its audience, and whether the motivation "
         "for tackling it is convincing.",
         {},
         p[0]},
        {"Rigor",
         "The soundness of the research method, evaluation design, data and analysis, and whether the "
         "conclusions follow from the evidence presented.",
         {"Check that sample sizes and evaluation settings justify the claims.",
          "Point out threats to validity that are not discussed."},
         p[3]},
    });
}

CriteriaSet import_xml(std::string_view xml) {
    pt::ptree tree;
    try {
        std::istringstream in{std::string(xml)};
        pt::read_xml(in, tree);
    } catch (const pt::xml_parser_error& e) {
        throw Error(ErrorCode::MalformedXml, e.what());
    }

    const pt::ptree* root = nullptr;
    for (const auto& [key, child] : tree) {
        if (key == kComment) continue;
        if (key != "criteria" || root != nullptr) {
            throw Error(ErrorCode::MalformedXml, "expected a single <criteria> root element, found <" + key + ">");
        }
        root = &child;
    }
    if (root == nullptr) throw Error(ErrorCode::MalformedXml, "missing <criteria> root element");

    std::vector<CriteriaSet::Draft> drafts;
    for (const auto& [key, node] : *root) {
        if (key == kComment || key == kAttr) continue;
        if (key != "criterion") throw Error(ErrorCode::MalformedXml, "unexpected element <" + key + "> in <criteria>");

        CriteriaSet::Draft draft;
        const auto name = node.get_optional<std::string>(kAttr + ".name");
        if (!name) throw Error(ErrorCode::MalformedXml, "<criterion> without a name attribute");
        draft.name = *name;
        if (const auto color = node.get_optional<std::string>(kAttr + ".color")) {
            draft.color = Color::parse(trim(*color));
        }
        int descriptions = 0;
        for (const auto& [child_key, child] : node) {
            if (child_key == kComment || child_key == kAttr) continue;
            if (child_key == "description") {
                ++descriptions;
                draft.description = child.data();
            } else if (child_key == "recommendation") {
                draft.recommendations.push_back(child.data());
            } else {
                throw Error(ErrorCode::MalformedXml, "unexpected element <" + child_key + "> in <criterion>");
            }
        }
        if (descriptions != 1) {
            throw Error(ErrorCode::MalformedXml, "criterion '" + draft.name + "' needs exactly one <description>");
        }
        drafts.push_back(std::move(draft));
    }
    return CriteriaSet::create(std::move(drafts));
}

std::string export_xml(const CriteriaSet& set) {
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<criteria>\n";
    for (const auto& c : set.criteria()) {
        out += "  <criterion name=\"" + xml_escape(c.name, true) + "\" color=\"" + c.color.hex() + "\">\n";
        out += "    <description>" + xml_escape(c.description, false) + "</description>\n";
        for (const auto& r : c.recommendations) {
            out += "    <recommendation>" + xml_escape(r, false) + "</recommendation>\n";
        }
        out += "  </criterion>\n";
    }
    out += "</criteria>\n";
    return out;
}

CriteriaSet import_json(const json& doc) {
    const json* list = &doc;
    if (doc.is_object()) {
        if (!doc.contains("criteria")) throw Error(ErrorCode::InvalidCriterion, "missing \"criteria\" array");
        list = &doc.at("criteria");
    }
    if (!list->is_array()) throw Error(ErrorCode::InvalidCriterion, "\"criteria\" must be an array");
    std::vector<CriteriaSet::Draft> drafts;
    try {
        for (const auto& item : *list) {
            CriteriaSet::Draft d;
            d.name = item.at("name").get<std::string>();
            d.description = item.at("description").get<std::string>();
            if (item.contains("recommendations")) {
                d.recommendations = item.at("recommendations").get<std::vector<std::string>>();
            }
            if (item.contains("color") && !item.at("color").is_null()) {
                d.color = Color::parse(item.at("color").get<std::string>());
            }
            drafts.push_back(std::move(d));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidCriterion, std::string("bad criteria JSON: ") + e.what());
    }
    return CriteriaSet::create(std::move(drafts));
}

json export_json(const CriteriaSet& set) {
    json list = json::array();
    for (const auto& c : set.criteria()) {
        json item{{"name", c.name}, {"description", c.description}, {"color", c.color.hex()}};
        item["recommendations"] = c.recommendations;
        list.push_back(std::move(item));
    }
    return {{"criteria", std::move(list)}};
}

}  // namespace annoreview
