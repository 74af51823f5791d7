#include "oracles.hpp"
#include "support.hpp"

#include "remkit/errors.hpp"
#include "remkit/geo.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace remkit;
using testing_support::offset;

TEST(Geo, HorizontalDistanceMatchesVectorAngleRoute) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lat(-80, 80), lon(-180, 180), d(-0.05, 0.05);
    for (int i = 0; i < 1000; ++i) {
        GeoPoint a{lat(rng), lon(rng), 0};
        GeoPoint b{a.lat + d(rng), a.lon + d(rng), 0};
        const double got = horizontal_distance(a, b);
        const double want = static_cast<double>(oracle::ground_distance(a, b));
        EXPECT_NEAR(got, want, 1e-6 + 1e-9 * want);
    }
}

TEST(Geo, CoincidentGroundProjectionsGiveZeroDistance) {
    const GeoPoint a{35.0, -78.0, 10.0};
    const GeoPoint b{35.0, -78.0, 90.0};
    EXPECT_EQ(horizontal_distance(a, b), 0.0);
    EXPECT_DOUBLE_EQ(vertical_distance(a, b), 80.0);
    EXPECT_DOUBLE_EQ(distance_3d(a, b), 80.0);
}

TEST(Geo, OneArcMinuteOfLatitude) {
    const GeoPoint a{0.0, 0.0, 0.0};
    const GeoPoint b{1.0 / 60.0, 0.0, 0.0};
    EXPECT_NEAR(horizontal_distance(a, b), kEarthRadiusM * std::numbers::pi / 180.0 / 60.0, 1e-6);
}

TEST(Geo, BearingCardinalDirections) {
    const GeoPoint o = testing_support::kOrigin;
    EXPECT_NEAR(bearing_deg(o, offset(0, 100, 0)), 0.0, 1e-6);
    EXPECT_NEAR(bearing_deg(o, offset(100, 0, 0)), 90.0, 1e-3);
    EXPECT_NEAR(bearing_deg(o, offset(0, -100, 0)), 180.0, 1e-6);
    EXPECT_NEAR(bearing_deg(o, offset(-100, 0, 0)), 270.0, 1e-3);
    EXPECT_EQ(bearing_deg(o, o), 0.0);
}

TEST(Geo, BearingMatchesProjectedChord) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 500; ++i) {
        const GeoPoint a = testing_support::random_point(rng, 1000, 0, 0);
        const GeoPoint b = testing_support::random_point(rng, 1000, 0, 0);
        const double diff = std::remainder(bearing_deg(a, b) - static_cast<double>(oracle::bearing(a, b)), 360.0);
        EXPECT_NEAR(diff, 0.0, 1e-6);
    }
}

TEST(Geo, LinkGeometryMatchesImageMethod) {
    std::mt19937_64 rng(5);
    const double lambda = wavelength_m(3.5e9);
    for (int i = 0; i < 1000; ++i) {
        const GeoPoint gs = testing_support::random_point(rng, 50, 1, 30);
        const GeoPoint uav = testing_support::random_point(rng, 800, 5, 150);
        const LinkGeometry g = link_geometry(gs, uav, lambda);
        const auto o = oracle::geometry(gs, uav);
        EXPECT_NEAR(g.d_h, static_cast<double>(o.d_h), 1e-6);
        EXPECT_NEAR(g.d_3d, static_cast<double>(o.d_3d), 1e-6);
        EXPECT_NEAR(g.d1 + g.d2, static_cast<double>(o.d_ref), 1e-6);
        EXPECT_NEAR(g.theta_t, static_cast<double>(o.theta_t), 1e-7);
        EXPECT_NEAR(g.theta_r, g.theta_t, 0.0);
        EXPECT_NEAR(g.theta_ref, static_cast<double>(o.theta_ref), 1e-7);
        EXPECT_NEAR(g.theta_t1, -g.theta_ref, 0.0);
        EXPECT_NEAR(g.theta_r1, g.theta_ref, 0.0);
        EXPECT_NEAR(std::remainder(g.phi_t - static_cast<double>(o.phi_t), 360.0), 0.0, 1e-6);
        EXPECT_NEAR(std::remainder(g.phi_r - static_cast<double>(o.phi_r), 360.0), 0.0, 1e-6);
        const double tau = 2.0 * std::numbers::pi * static_cast<double>(o.d_ref - o.d_3d) / lambda;
        EXPECT_NEAR(g.delta_tau, tau, 1e-6 * std::max(1.0, tau));
    }
}

TEST(Geo, SpecularPointSplitsByHeightRatio) {
    const GeoPoint gs = offset(0, 0, 10);
    const GeoPoint uav = offset(0, 300, 50);
    const auto g = link_geometry(gs, uav, 0.1);
    // x_spec = d_h h_gs / (h_gs + h_uav) = 50 m
    EXPECT_NEAR(g.d1, std::hypot(50.0, 10.0), 1e-6);
    EXPECT_NEAR(g.d2, std::hypot(250.0, 50.0), 1e-6);
}

TEST(Geo, VerticalLinkHasPlusMinusNinetyElevation) {
    const GeoPoint gs{35.0, -78.0, 10.0};
    const auto up = link_geometry(gs, {35.0, -78.0, 60.0}, 0.1);
    EXPECT_EQ(up.d_h, 0.0);
    EXPECT_EQ(up.phi_t, 0.0);
    EXPECT_DOUBLE_EQ(up.theta_t, 90.0);
    const auto down = link_geometry({35.0, -78.0, 60.0}, gs, 0.1);
    EXPECT_DOUBLE_EQ(down.theta_t, -90.0);
}

TEST(Geo, UavBelowGroundStationHasNegativeElevation) {
    const auto g = link_geometry(offset(0, 0, 50), offset(100, 0, 20), 0.1);
    EXPECT_LT(g.theta_t, 0.0);
    EXPECT_NEAR(g.theta_t, -std::atan2(30.0, 100.0) * 180.0 / std::numbers::pi, 1e-3);
}

TEST(Geo, DegenerateAndInvalidLinks) {
    const GeoPoint p{35.0, -78.0, 10.0};
    EXPECT_THROW(link_geometry(p, p, 0.1), DegenerateLink);
    EXPECT_THROW(link_geometry(p, {35.0, -78.001, -1.0}, 0.1), ValidationError);
    EXPECT_THROW(validate(GeoPoint{91.0, 0.0, 0.0}), RangeError);
    EXPECT_THROW(validate(GeoPoint{0.0, 181.0, 0.0}), RangeError);
    EXPECT_NO_THROW(validate(GeoPoint{-90.0, 180.0, 0.0}));
}

TEST(Geo, LocalFrameRoundTrip) {
    const LocalFrame f(testing_support::kOrigin);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> d(-2000, 2000);
    for (int i = 0; i < 100; ++i) {
        const LocalXY xy{d(rng), d(rng)};
        const GeoPoint p = f.to_geo(xy, 30.0);
        const LocalXY back = f.to_local(p);
        EXPECT_NEAR(back.east, xy.east, 1e-6);
        EXPECT_NEAR(back.north, xy.north, 1e-6);
        EXPECT_NEAR(horizontal_distance(f.origin(), p), std::hypot(xy.east, xy.north),
                    1e-3 * std::hypot(xy.east, xy.north) + 1e-6);
    }
}

TEST(Geo, WavelengthAt3p5GHz) { EXPECT_NEAR(wavelength_m(3.5e9), 0.0856549880, 1e-9); }
