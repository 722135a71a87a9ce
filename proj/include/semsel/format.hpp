#ifndef SEMSEL_FORMAT_HPP
#define SEMSEL_FORMAT_HPP

#include <cmath>
#include <cstdio>
#include <string>

namespace semsel::detail {

/// Fixed-significant-digit rendering (%.{sig}g), stable across runs.
inline std::string fmt_g(double v, int significant) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", significant, v);
    return buf;
}

/// Fixed four-decimal rendering for probability tables.
inline std::string fmt_f4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

} // namespace semsel::detail

#endif // SEMSEL_FORMAT_HPP
