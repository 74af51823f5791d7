#pragma once

#include "remkit/geo.hpp"
#include "remkit/shadow_stats.hpp"

#include <random>
#include <vector>

namespace testing_support {

inline const remkit::GeoPoint kOrigin{35.7275, -78.6960, 0.0};

/// Point at (east, north) meters from kOrigin and the given altitude.
inline remkit::GeoPoint offset(double east, double north, double alt) {
    return remkit::LocalFrame(kOrigin).to_geo({east, north}, alt);
}

inline remkit::GeoPoint random_point(std::mt19937_64& rng, double half_extent_m, double alt_lo, double alt_hi) {
    std::uniform_real_distribution<double> xy(-half_extent_m, half_extent_m);
    std::uniform_real_distribution<double> h(alt_lo, alt_hi);
    const double e = xy(rng);
    const double n = xy(rng);
    return offset(e, n, h(rng));
}

inline std::vector<remkit::SfSample> random_samples(std::mt19937_64& rng, std::size_t n, double half_extent_m,
                                                    double alt_lo, double alt_hi, double z_sd = 3.0) {
    std::normal_distribution<double> z(0.0, z_sd);
    std::vector<remkit::SfSample> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({random_point(rng, half_extent_m, alt_lo, alt_hi), z(rng), static_cast<std::int64_t>(i)});
    return out;
}

inline remkit::CorrelationModel random_model(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> a(0.2, 1.0), p1(0.01, 0.1), p2(0.001, 0.01), q(0.0, 0.1), s(1.0, 5.0);
    return {a(rng), p1(rng), p2(rng), q(rng), s(rng)};
}

} // namespace testing_support
