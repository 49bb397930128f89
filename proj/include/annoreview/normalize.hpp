#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "annoreview/text.hpp"

namespace annoreview {

/// Output of the normalization pipeline together with its offset maps.
///
/// The pipeline runs, in this fixed order: NFKC, ligature expansion,
/// soft-hyphen removal, joining of words hyphenated across a line break
/// (hyphen, line break, lowercase letter), collapse of whitespace runs to a
/// single space with the ends trimmed, and full case folding.
///
/// `norm_to_raw[i]` is the raw code point range that produced normalized
/// code point `i`. `raw_to_norm[r]` is the normalized range produced by raw
/// code point `r`; it is empty (begin == end) for dropped characters and
/// then sits at the position where the character would have been.
struct NormalizedText {
    std::u32string text;
    std::vector<IndexRange> norm_to_raw;
    std::vector<IndexRange> raw_to_norm;

    /// Raw index a normalized index originated from.
    [[nodiscard]] std::size_t raw_index(std::size_t norm_index) const;

    /// Normalized index for a raw index. Dropped characters resolve to the
    /// preceding normalized character, or to the following one when they
    /// open a token, so they stay inside their token.
    [[nodiscard]] std::size_t norm_index(std::size_t raw_index) const;

    /// Raw range covered by the normalized span [begin, end).
    [[nodiscard]] IndexRange raw_span(IndexRange norm_span) const;

    friend bool operator==(const NormalizedText&, const NormalizedText&) = default;
};

[[nodiscard]] NormalizedText normalize(std::u32string_view raw);

/// Normalized text only, as UTF-8.
[[nodiscard]] std::string normalize_utf8(std::string_view raw_utf8);

}  // namespace annoreview
