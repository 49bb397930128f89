#pragma once

#include <chrono>
#include <functional>
#include <string>

namespace annoreview {

using Clock = std::function<std::chrono::system_clock::time_point()>;

[[nodiscard]] inline Clock system_clock() {
    return [] { return std::chrono::system_clock::now(); };
}

/// UTC, millisecond precision: 2024-05-01T12:00:00.000Z
[[nodiscard]] std::string iso_timestamp(std::chrono::system_clock::time_point tp);

}  // namespace annoreview
