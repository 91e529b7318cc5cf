#pragma once

#include <cstdio>
#include <string>

namespace dualloco::detail {

// Compact scientific form for diagnostics; tiny duality gaps would all print
// as "0.000000" through std::to_string.
inline std::string format_scientific(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.3e", value);
    return buffer;
}

}  // namespace dualloco::detail
