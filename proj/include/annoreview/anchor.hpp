#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "annoreview/document_store.hpp"
#include "annoreview/text.hpp"

namespace annoreview {

enum class MatchKind { Exact, Fuzzy, Unanchored };

[[nodiscard]] std::string_view to_string(MatchKind kind);
[[nodiscard]] MatchKind parse_match_kind(std::string_view s);

/// Located position of an excerpt. `raw_range`/`page` are absent exactly
/// when `kind == Unanchored`; `ratio` is edit distance over normalized
/// excerpt length (0 for exact matches).
struct Anchor {
    MatchKind kind = MatchKind::Unanchored;
    std::optional<IndexRange> raw_range;
    std::optional<int> page;
    double ratio = 0.0;
    /// Span in the normalized text; not serialized.
    std::optional<IndexRange> norm_range;

    [[nodiscard]] static Anchor unanchored() { return Anchor{}; }
    [[nodiscard]] bool anchored() const { return kind != MatchKind::Unanchored; }

    friend bool operator==(const Anchor&, const Anchor&) = default;
};

/// Several locations scored within the ambiguity band of the best one.
/// Ordered by ratio, then by lowest offset.
struct AnchorCandidateSet {
    std::vector<Anchor> candidates;
    friend bool operator==(const AnchorCandidateSet&, const AnchorCandidateSet&) = default;
};

struct Unanchored {
    friend bool operator==(const Unanchored&, const Unanchored&) = default;
};

using LocateResult = std::variant<Anchor, AnchorCandidateSet, Unanchored>;

struct LocateOptions {
    double max_ratio = 0.2;
    double ambiguity_band = 0.02;
    /// Window length is the excerpt length plus or minus this fraction.
    double window_slack = 0.2;
    /// Reference mode: score every window at every offset. Slow; used to
    /// check that the pruned search returns identical results.
    bool exhaustive = false;
};

/// Levenshtein distance with unit costs, over code points.
[[nodiscard]] std::size_t edit_distance(std::u32string_view a, std::u32string_view b);
[[nodiscard]] std::size_t edit_distance(std::string_view a_utf8, std::string_view b_utf8);

/// A scored window of the normalized text.
struct TextHit {
    IndexRange span;
    std::size_t distance = 0;
    friend bool operator==(const TextHit&, const TextHit&) = default;
};

/// Core search over normalized text. Returns exact occurrences when there
/// are any; otherwise non-overlapping fuzzy windows within the ambiguity
/// band of the best, best first. Empty when nothing is under `max_ratio`.
/// Throws EmptyExcerpt for an empty pattern.
[[nodiscard]] std::vector<TextHit> find_hits(std::u32string_view text, std::u32string_view pattern,
                                             const LocateOptions& options = {});

/// Locates an excerpt (raw, un-normalized UTF-8) in a manuscript.
[[nodiscard]] LocateResult locate(const Manuscript& manuscript, std::string_view excerpt,
                                  const LocateOptions& options = {});

/// Earliest candidate by raw offset.
[[nodiscard]] Anchor pick_earliest(const AnchorCandidateSet& set);

}  // namespace annoreview
