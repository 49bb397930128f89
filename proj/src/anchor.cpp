#include "annoreview/anchor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <tuple>

#include "annoreview/error.hpp"
#include "annoreview/normalize.hpp"

namespace annoreview {

namespace {

struct Window {
    std::size_t start = 0;
    std::size_t length = 0;
    std::size_t distance = 0;
};

struct SearchBounds {
    std::size_t max_distance;
    std::size_t min_length;
    std::size_t max_length;
};

SearchBounds bounds_for(std::size_t pattern_length, const LocateOptions& options) {
    const auto len = static_cast<double>(pattern_length);
    const auto max_distance = static_cast<std::size_t>(std::floor(options.max_ratio * len + 1e-9));
    const auto slack = std::max(static_cast<std::size_t>(std::ceil(options.window_slack * len - 1e-9)), max_distance);
    return {max_distance, pattern_length > slack ? pattern_length - slack : 1, pattern_length + slack};
}

std::vector<TextHit> exact_hits(std::u32string_view text, std::u32string_view pattern) {
    std::vector<TextHit> hits;
    std::size_t pos = text.find(pattern);
    while (pos != std::u32string_view::npos) {
        hits.push_back({{pos, pos + pattern.size()}, 0});
        pos = text.find(pattern, pos + 1);
    }
    return hits;
}

/// Reference: for every start, score every window length in range.
std::vector<Window> best_windows_exhaustive(std::u32string_view text, std::u32string_view pattern,
                                            const SearchBounds& b) {
    const std::size_t m = pattern.size();
    std::vector<Window> result;
    std::vector<std::size_t> column(m + 1);
    for (std::size_t s = 0; s < text.size(); ++s) {
        for (std::size_t i = 0; i <= m; ++i) column[i] = i;
        std::optional<Window> best;
        const std::size_t limit = std::min(text.size() - s, b.max_length);
        for (std::size_t len = 1; len <= limit; ++len) {
            const char32_t tc = text[s + len - 1];
            std::size_t diag = column[0];
            column[0] = len;
            for (std::size_t i = 1; i <= m; ++i) {
                const std::size_t up = column[i];
                column[i] = std::min({diag + (pattern[i - 1] == tc ? 0 : 1), up + 1, column[i - 1] + 1});
                diag = up;
            }
            if (len >= b.min_length && (!best || column[m] < best->distance)) {
                best = Window{s, len, column[m]};
            }
        }
        if (best && best->distance <= b.max_distance) result.push_back(*best);
    }
    return result;
}

/// End positions e for which some window T[s, e) is within max_distance of
/// the pattern (semi-global alignment with Ukkonen's cutoff).
std::vector<std::size_t> qualifying_ends(std::u32string_view text, std::u32string_view pattern, std::size_t k) {
    const std::size_t m = pattern.size();
    const auto cap = static_cast<std::uint32_t>(k + 1);
    std::vector<std::uint32_t> column(m + 1);
    for (std::size_t i = 0; i <= m; ++i) column[i] = static_cast<std::uint32_t>(std::min<std::size_t>(i, k + 1));
    std::size_t last_active = std::min(k + 1, m);
    std::vector<std::size_t> ends;

    for (std::size_t j = 1; j <= text.size(); ++j) {
        const char32_t tc = text[j - 1];
        std::uint32_t prev_old = 0;  // old column[i - 1]
        std::uint32_t prev_new = 0;  // new column[i - 1]
        for (std::size_t i = 1; i <= last_active; ++i) {
            const std::uint32_t old = column[i];
            std::uint32_t value = pattern[i - 1] == tc ? prev_old : 1 + std::min({prev_old, prev_new, old});
            value = std::min(value, cap);
            prev_old = old;
            column[i] = value;
            prev_new = value;
        }
        while (last_active > 0 && column[last_active] > k) --last_active;
        if (last_active == m) {
            ends.push_back(j);
        } else {
            ++last_active;
        }
    }
    return ends;
}

/// For each start in [a, b), the best window (min distance, then shortest)
/// that lies within [a, b). Runs the alignment on reversed strings so the
/// free end of the window becomes a free start.
void best_windows_in_region(std::u32string_view text, std::u32string_view pattern, std::size_t a, std::size_t b,
                            std::size_t max_distance, std::vector<Window>& out) {
    struct Cell {
        std::size_t cost;
        std::size_t end;  // original exclusive end of the window
        bool operator<(const Cell& o) const { return std::tie(cost, end) < std::tie(o.cost, o.end); }
    };
    const std::size_t m = pattern.size();
    std::vector<Cell> column(m + 1);
    for (std::size_t i = 0; i <= m; ++i) column[i] = {i, b};

    for (std::size_t jr = 1; jr <= b - a; ++jr) {
        const std::size_t pos = b - jr;  // original index of this text char
        const char32_t tc = text[pos];
        Cell diag = column[0];
        column[0] = {0, pos};
        for (std::size_t i = 1; i <= m; ++i) {
            const Cell up = column[i];
            Cell candidate{diag.cost + (pattern[m - i] == tc ? 0 : 1), diag.end};
            candidate = std::min(candidate, Cell{up.cost + 1, up.end});
            candidate = std::min(candidate, Cell{column[i - 1].cost + 1, column[i - 1].end});
            column[i] = candidate;
            diag = up;
        }
        const Cell& best = column[m];
        if (best.cost <= max_distance && best.end > pos) out.push_back({pos, best.end - pos, best.cost});
    }
}

std::vector<Window> best_windows_pruned(std::u32string_view text, std::u32string_view pattern, const SearchBounds& b) {
    const auto ends = qualifying_ends(text, pattern, b.max_distance);
    std::vector<Window> result;
    if (ends.empty()) return result;

    // every window within budget ends at a qualifying end and starts at most
    // max_length before it
    std::vector<IndexRange> regions;
    for (std::size_t e : ends) {
        const IndexRange r{e > b.max_length ? e - b.max_length : 0, e};
        if (!regions.empty() && r.begin <= regions.back().end) {
            regions.back().end = std::max(regions.back().end, r.end);
        } else {
            regions.push_back(r);
        }
    }
    for (const auto& r : regions) best_windows_in_region(text, pattern, r.begin, r.end, b.max_distance, result);
    std::sort(result.begin(), result.end(), [](const Window& x, const Window& y) { return x.start < y.start; });
    return result;
}

std::vector<TextHit> select_hits(std::vector<Window> windows, std::size_t pattern_length, double band) {
    std::sort(windows.begin(), windows.end(), [](const Window& x, const Window& y) {
        return std::tie(x.distance, x.start, x.length) < std::tie(y.distance, y.start, y.length);
    });
    std::vector<TextHit> selected;
    for (const auto& w : windows) {
        const IndexRange span{w.start, w.start + w.length};
        const bool overlaps = std::any_of(selected.begin(), selected.end(), [&](const TextHit& h) {
            return span.begin < h.span.end && h.span.begin < span.end;
        });
        if (!overlaps) selected.push_back({span, w.distance});
    }
    if (selected.empty()) return selected;
    const auto len = static_cast<double>(pattern_length);
    const double best_ratio = static_cast<double>(selected.front().distance) / len;
    std::erase_if(selected, [&](const TextHit& h) {
        return static_cast<double>(h.distance) / len - best_ratio > band + 1e-12;
    });
    return selected;
}

}  // namespace

std::string_view to_string(MatchKind kind) {
    switch (kind) {
        case MatchKind::Exact: return "exact";
        case MatchKind::Fuzzy: return "fuzzy";
        case MatchKind::Unanchored: return "unanchored";
    }
    return "unanchored";
}

MatchKind parse_match_kind(std::string_view s) {
    if (s == "exact") return MatchKind::Exact;
    if (s == "fuzzy") return MatchKind::Fuzzy;
    if (s == "unanchored") return MatchKind::Unanchored;
    throw Error(ErrorCode::InvalidArgument, "unknown match kind '" + std::string(s) + "'");
}

std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({diag + (a[i - 1] == b[j - 1] ? 0 : 1), up + 1, row[j - 1] + 1});
            diag = up;
        }
    }
    return row[b.size()];
}

std::size_t edit_distance(std::string_view a_utf8, std::string_view b_utf8) {
    return edit_distance(utf8_to_u32(a_utf8), utf8_to_u32(b_utf8));
}

std::vector<TextHit> find_hits(std::u32string_view text, std::u32string_view pattern, const LocateOptions& options) {
    if (pattern.empty()) throw Error(ErrorCode::EmptyExcerpt, "excerpt is empty after normalization");
    if (!(options.max_ratio >= 0.0 && options.max_ratio < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "max_ratio must be in [0, 1)");
    }
    if (auto exact = exact_hits(text, pattern); !exact.empty()) return exact;

    const auto b = bounds_for(pattern.size(), options);
    auto windows = options.exhaustive ? best_windows_exhaustive(text, pattern, b)
                                      : best_windows_pruned(text, pattern, b);
    return select_hits(std::move(windows), pattern.size(), options.ambiguity_band);
}

LocateResult locate(const Manuscript& manuscript, std::string_view excerpt, const LocateOptions& options) {
    const auto pattern = normalize(utf8_to_u32(excerpt)).text;
    if (pattern.empty()) throw Error(ErrorCode::EmptyExcerpt, "excerpt is empty after normalization");
    const auto hits = find_hits(manuscript.normalized.text, pattern, options);
    if (hits.empty()) return Unanchored{};

    std::vector<Anchor> anchors;
    anchors.reserve(hits.size());
    for (const auto& hit : hits) {
        Anchor a;
        a.kind = hit.distance == 0 ? MatchKind::Exact : MatchKind::Fuzzy;
        a.norm_range = hit.span;
        a.raw_range = manuscript.normalized.raw_span(hit.span);
        a.page = manuscript.page_at(a.raw_range->begin);
        a.ratio = static_cast<double>(hit.distance) / static_cast<double>(pattern.size());
        anchors.push_back(a);
    }
    if (anchors.size() == 1) return anchors.front();
    return AnchorCandidateSet{std::move(anchors)};
}

Anchor pick_earliest(const AnchorCandidateSet& set) {
    if (set.candidates.empty()) return Anchor::unanchored();
    return *std::min_element(set.candidates.begin(), set.candidates.end(), [](const Anchor& x, const Anchor& y) {
        return x.raw_range.value_or(IndexRange{}).begin < y.raw_range.value_or(IndexRange{}).begin;
    });
}

}  // namespace annoreview
