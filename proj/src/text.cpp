#include "annoreview/text.hpp"

#include <unicode/utf8.h>

#include "annoreview/error.hpp"

namespace annoreview {

bool is_valid_utf8(std::string_view bytes) noexcept {
    const auto* s = reinterpret_cast<const uint8_t*>(bytes.data());
    const auto length = static_cast<int32_t>(bytes.size());
    int32_t i = 0;
    while (i < length) {
        UChar32 c = 0;
        U8_NEXT(s, i, length, c);
        if (c < 0) return false;
    }
    return true;
}

std::u32string utf8_to_u32(std::string_view bytes) {
    std::u32string out;
    out.reserve(bytes.size());
    const auto* s = reinterpret_cast<const uint8_t*>(bytes.data());
    const auto length = static_cast<int32_t>(bytes.size());
    int32_t i = 0;
    while (i < length) {
        UChar32 c = 0;
        U8_NEXT(s, i, length, c);
        if (c < 0) {
            throw Error(ErrorCode::UnsupportedFormat,
                        "invalid UTF-8 at byte offset " + std::to_string(i - 1));
        }
        out.push_back(static_cast<char32_t>(c));
    }
    return out;
}

std::string u32_to_utf8(std::u32string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char32_t c : text) {
        uint8_t buf[U8_MAX_LENGTH];
        int32_t n = 0;
        UBool error = false;
        U8_APPEND(buf, n, U8_MAX_LENGTH, static_cast<UChar32>(c), error);
        if (error) {
            // lone surrogates and out-of-range values become U+FFFD
            out += "\xEF\xBF\xBD";
            continue;
        }
        out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
    }
    return out;
}

std::string utf8_slice(std::u32string_view text, IndexRange range) {
    if (range.begin >= text.size() || range.empty()) return {};
    const auto end = std::min(range.end, text.size());
    return u32_to_utf8(text.substr(range.begin, end - range.begin));
}

std::string trim(std::string_view s) {
    const auto* ws = " \t\r\n\f\v";
    const auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(ws);
    return std::string(s.substr(first, last - first + 1));
}

}  // namespace annoreview
