#include "annoreview/normalize.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>
#include <utility>

namespace annoreview {

namespace {

struct Unit {
    char32_t c;
    IndexRange raw;
};

const icu::Normalizer2& nfkc_instance() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFKCInstance(status);
    if (U_FAILURE(status) || n == nullptr) {
        throw std::runtime_error("ICU NFKC normalizer unavailable");
    }
    return *n;
}

std::vector<Unit> apply_nfkc(std::u32string_view raw) {
    const auto& nfkc = nfkc_instance();
    std::vector<Unit> out;
    out.reserve(raw.size());

    std::size_t i = 0;
    while (i < raw.size()) {
        // chunk = [i, j) where j is the next normalization boundary
        std::size_t j = i + 1;
        while (j < raw.size() && !nfkc.hasBoundaryBefore(static_cast<UChar32>(raw[j]))) ++j;

        if (j == i + 1 && raw[i] < 0x80) {
            out.push_back({raw[i], {i, i + 1}});
            i = j;
            continue;
        }

        icu::UnicodeString chunk;
        for (std::size_t k = i; k < j; ++k) chunk.append(static_cast<UChar32>(raw[k]));
        UErrorCode status = U_ZERO_ERROR;
        const icu::UnicodeString normalized = nfkc.normalize(chunk, status);
        if (U_FAILURE(status) || normalized == chunk) {
            for (std::size_t k = i; k < j; ++k) out.push_back({raw[k], {k, k + 1}});
        } else {
            for (int32_t k = 0; k < normalized.length(); k = normalized.moveIndex32(k, 1)) {
                out.push_back({static_cast<char32_t>(normalized.char32At(k)), {i, j}});
            }
        }
        i = j;
    }
    return out;
}

constexpr std::array<std::pair<char32_t, std::u32string_view>, 7> kLigatures{{
    {U'\uFB00', U"ff"},
    {U'\uFB01', U"fi"},
    {U'\uFB02', U"fl"},
    {U'\uFB03', U"ffi"},
    {U'\uFB04', U"ffl"},
    {U'\uFB05', U"st"},
    {U'\uFB06', U"st"},
}};

std::vector<Unit> expand_ligatures(std::vector<Unit> units) {
    // NFKC already decomposes these; the table is kept so the rule holds
    // even if a future compatibility mapping changes.
    std::vector<Unit> out;
    out.reserve(units.size());
    for (const auto& u : units) {
        const auto it = std::find_if(kLigatures.begin(), kLigatures.end(),
                                     [&](const auto& entry) { return entry.first == u.c; });
        if (it == kLigatures.end()) {
            out.push_back(u);
            continue;
        }
        for (char32_t c : it->second) out.push_back({c, u.raw});
    }
    return out;
}

std::vector<Unit> drop_soft_hyphens(std::vector<Unit> units) {
    std::erase_if(units, [](const Unit& u) { return u.c == U'\u00AD'; });
    return units;
}

bool is_hyphen(char32_t c) { return c == U'-' || c == U'\u2010' || c == U'\u2011'; }

bool is_horizontal_space(char32_t c) { return c == U' ' || c == U'\t'; }

bool is_line_break(char32_t c) {
    return c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' || c == U'\u0085' ||
           c == U'\u2028' || c == U'\u2029';
}

std::vector<Unit> join_hyphenated_words(std::vector<Unit> units) {
    std::vector<Unit> out;
    out.reserve(units.size());
    std::size_t i = 0;
    while (i < units.size()) {
        if (is_hyphen(units[i].c)) {
            std::size_t j = i + 1;
            while (j < units.size() && is_horizontal_space(units[j].c)) ++j;
            if (j < units.size() && is_line_break(units[j].c)) {
                // \r\n counts as one break
                if (units[j].c == U'\r' && j + 1 < units.size() && units[j + 1].c == U'\n') ++j;
                ++j;
                while (j < units.size() && is_horizontal_space(units[j].c)) ++j;
                if (j < units.size() && u_islower(static_cast<UChar32>(units[j].c))) {
                    i = j;
                    continue;
                }
            }
        }
        out.push_back(units[i]);
        ++i;
    }
    return out;
}

bool is_whitespace(char32_t c) {
    return c < 0x80 ? (c == U' ' || (c >= U'\t' && c <= U'\r'))
                    : static_cast<bool>(u_isUWhiteSpace(static_cast<UChar32>(c)));
}

std::vector<Unit> collapse_whitespace(std::vector<Unit> units) {
    std::vector<Unit> out;
    out.reserve(units.size());
    bool pending_space = false;
    IndexRange space_source{};
    for (const auto& u : units) {
        if (is_whitespace(u.c)) {
            if (!pending_space) space_source = u.raw;
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back({U' ', space_source});
        pending_space = false;
        out.push_back(u);
    }
    return out;
}

std::vector<Unit> fold_case(std::vector<Unit> units) {
    std::vector<Unit> out;
    out.reserve(units.size());
    for (const auto& u : units) {
        if (u.c < 0x80) {
            out.push_back({(u.c >= U'A' && u.c <= U'Z') ? u.c + 32 : u.c, u.raw});
            continue;
        }
        icu::UnicodeString s(static_cast<UChar32>(u.c));
        s.foldCase();
        for (int32_t k = 0; k < s.length(); k = s.moveIndex32(k, 1)) {
            out.push_back({static_cast<char32_t>(s.char32At(k)), u.raw});
        }
    }
    return out;
}

}  // namespace

std::size_t NormalizedText::raw_index(std::size_t norm_index) const {
    return norm_to_raw.at(norm_index).begin;
}

std::size_t NormalizedText::norm_index(std::size_t raw_index) const {
    const auto& produced = raw_to_norm.at(raw_index);
    if (!produced.empty()) return produced.begin;
    const std::size_t at = produced.begin;
    // at the start of a token the following character is the token's own
    if (at > 0 && text[at - 1] != U' ') return at - 1;
    if (at < text.size()) return at;
    return at > 0 ? at - 1 : 0;
}

IndexRange NormalizedText::raw_span(IndexRange norm_span) const {
    if (norm_span.empty()) return {};
    return {norm_to_raw.at(norm_span.begin).begin, norm_to_raw.at(norm_span.end - 1).end};
}

NormalizedText normalize(std::u32string_view raw) {
    auto units = fold_case(collapse_whitespace(
        join_hyphenated_words(drop_soft_hyphens(expand_ligatures(apply_nfkc(raw))))));

    NormalizedText result;
    result.text.reserve(units.size());
    result.norm_to_raw.reserve(units.size());
    for (const auto& u : units) {
        result.text.push_back(u.c);
        result.norm_to_raw.push_back(u.raw);
    }

    constexpr auto unset = std::numeric_limits<std::size_t>::max();
    result.raw_to_norm.assign(raw.size(), IndexRange{unset, unset});
    for (std::size_t i = 0; i < units.size(); ++i) {
        for (std::size_t r = units[i].raw.begin; r < units[i].raw.end; ++r) {
            auto& entry = result.raw_to_norm[r];
            if (entry.begin == unset) entry.begin = i;
            entry.end = i + 1;
        }
    }
    std::size_t next = units.size();
    for (std::size_t r = raw.size(); r-- > 0;) {
        auto& entry = result.raw_to_norm[r];
        if (entry.begin == unset) {
            entry = {next, next};
        } else {
            next = entry.begin;
        }
    }
    return result;
}

std::string normalize_utf8(std::string_view raw_utf8) {
    return u32_to_utf8(normalize(utf8_to_u32(raw_utf8)).text);
}

}  // namespace annoreview
