#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace mtorque {

/// Shortest decimal text that parses back to the same double.
inline std::string shortest(double value) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

/// Fixed notation with `digits` decimals; negative zero prints as zero.
inline std::string fixed(double value, int digits = 6) {
    if (value == 0.0)
        value = 0.0;
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, digits);
    std::string s(buf, res.ptr);
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos)
        s.erase(0, 1);
    return s;
}

} // namespace mtorque
