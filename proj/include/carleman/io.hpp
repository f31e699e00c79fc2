#pragma once

#include <cstdio>
#include <string>

namespace carleman::io {

/// Fixed 17-significant-digit rendering, so CSV output is reproducible.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace carleman::io
