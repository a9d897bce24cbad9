#pragma once

#include <cstdio>
#include <string>

namespace durinv {

constexpr const char* kLibraryVersion = "0.1.0";

// 17 significant digits: lossless double round-trip, '.' decimal separator
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace durinv
