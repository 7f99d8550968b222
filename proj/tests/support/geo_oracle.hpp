#pragma once

#include <cmath>

// Independent great-circle reference. Uses the atan2 formulation (the
// spherical Vincenty special case) rather than the library's asin/haversine
// route, so agreement is a genuine cross-check.
namespace testsupport {

inline double oracle_great_circle_km(double lat1, double lon1, double lat2, double lon2) {
    constexpr double kRadius = 6371.0088;
    constexpr double kDeg = 3.14159265358979323846 / 180.0;
    const double p1 = lat1 * kDeg, p2 = lat2 * kDeg;
    const double dl = (lon2 - lon1) * kDeg;
    const double num = std::sqrt(std::pow(std::cos(p2) * std::sin(dl), 2) +
                                 std::pow(std::cos(p1) * std::sin(p2) -
                                              std::sin(p1) * std::cos(p2) * std::cos(dl),
                                          2));
    const double den = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
    return kRadius * std::atan2(num, den);
}

inline int oracle_round_half_away(double v) {
    return static_cast<int>(v >= 0 ? std::floor(v + 0.5) : std::ceil(v - 0.5));
}

} // namespace testsupport
