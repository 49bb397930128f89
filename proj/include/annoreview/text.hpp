#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace annoreview {

/// Half-open interval of code point indices.
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    [[nodiscard]] std::size_t size() const noexcept { return end - begin; }
    [[nodiscard]] bool empty() const noexcept { return end <= begin; }
    [[nodiscard]] bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }

    friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

[[nodiscard]] bool is_valid_utf8(std::string_view bytes) noexcept;

/// Throws Error(UnsupportedFormat) on malformed input.
[[nodiscard]] std::u32string utf8_to_u32(std::string_view bytes);

[[nodiscard]] std::string u32_to_utf8(std::u32string_view text);

/// Substring by code point range, returned as UTF-8.
[[nodiscard]] std::string utf8_slice(std::u32string_view text, IndexRange range);

[[nodiscard]] std::string trim(std::string_view s);

}  // namespace annoreview
