#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace annoreview {

/// 24-bit RGB color, serialized as lowercase "#rrggbb".
struct Color {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    /// Accepts "#rrggbb" in either case. Throws InvalidCriterion.
    [[nodiscard]] static Color parse(std::string_view hex);
    [[nodiscard]] std::string hex() const;

    friend bool operator==(const Color&, const Color&) = default;
};

/// Highlighter palette used for automatic color assignment, in order.
[[nodiscard]] const std::array<Color, 16>& default_palette();

struct Criterion {
    std::string name;
    std::string description;
    std::vector<std::string> recommendations;
    Color color;

    friend bool operator==(const Criterion&, const Criterion&) = default;
};

/// Ordered, validated set of review criteria. Names are unique ignoring
/// case, colors are unique, 1 to 16 entries.
class CriteriaSet {
public:
    static constexpr std::size_t kMaxCriteria = 16;

    /// Criteria without a color get the first unused palette color, in order.
    /// Throws EmptyCriteria, TooManyCriteria, DuplicateName, DuplicateColor or
    /// InvalidCriterion.
    struct Draft {
        std::string name;
        std::string description;
        std::vector<std::string> recommendations;
        std::optional<Color> color;
    };
    [[nodiscard]] static CriteriaSet create(std::vector<Draft> drafts);

    [[nodiscard]] const std::vector<Criterion>& criteria() const { return criteria_; }
    [[nodiscard]] std::size_t size() const { return criteria_.size(); }

    /// Case-insensitive lookup.
    [[nodiscard]] const Criterion* find(std::string_view name) const;

    friend bool operator==(const CriteriaSet&, const CriteriaSet&) = default;

private:
    std::vector<Criterion> criteria_;
};

/// Contribution, Originality, Relevance and Rigor, with Relevance yellow and
/// Originality green.
[[nodiscard]] CriteriaSet default_criteria();

/// Schema:
///   <criteria>
///     <criterion name="..." color="#rrggbb"?>
///       <description>...</description>
///       <recommendation>...</recommendation>*
///     </criterion>+
///   </criteria>
[[nodiscard]] CriteriaSet import_xml(std::string_view xml);
[[nodiscard]] std::string export_xml(const CriteriaSet& set);

/// {"criteria": [{"name", "description", "recommendations"?, "color"?}]}
[[nodiscard]] CriteriaSet import_json(const nlohmann::json& doc);
[[nodiscard]] nlohmann::json export_json(const CriteriaSet& set);

/// Case-insensitive (ASCII + simple Unicode folding) name comparison key.
[[nodiscard]] std::string criterion_key(std::string_view name);

}  // namespace annoreview
