#include "remkit/geo.hpp"

#include "remkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace remkit {

void validate(const GeoPoint& p) {
    if (!(p.lat >= -90.0 && p.lat <= 90.0))
        throw RangeError("latitude out of range: " + std::to_string(p.lat));
    if (!(p.lon >= -180.0 && p.lon <= 180.0))
        throw RangeError("longitude out of range: " + std::to_string(p.lon));
    if (!std::isfinite(p.alt))
        throw RangeError("altitude is not finite");
}

double horizontal_distance(const GeoPoint& a, const GeoPoint& b) {
    // Haversine form of the spherical law of cosines; identical in exact
    // arithmetic, but keeps full precision at meter-scale separations.
    const double phi1 = deg2rad(a.lat);
    const double phi2 = deg2rad(b.lat);
    const double dphi = phi2 - phi1;
    const double dlam = deg2rad(b.lon - a.lon);
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlam / 2.0);
    double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    h = std::clamp(h, 0.0, 1.0);
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

double vertical_distance(const GeoPoint& a, const GeoPoint& b) { return std::abs(a.alt - b.alt); }

double distance_3d(const GeoPoint& a, const GeoPoint& b) {
    return std::hypot(horizontal_distance(a, b), vertical_distance(a, b));
}

double bearing_deg(const GeoPoint& from, const GeoPoint& to) {
    const double phi1 = deg2rad(from.lat);
    const double phi2 = deg2rad(to.lat);
    const double dlam = deg2rad(to.lon - from.lon);
    const double y = std::sin(dlam) * std::cos(phi2);
    const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlam);
    if (x == 0.0 && y == 0.0)
        return 0.0;
    double deg = rad2deg(std::atan2(y, x));
    if (deg < 0.0)
        deg += 360.0;
    return deg >= 360.0 ? 0.0 : deg;
}

double wavelength_m(double carrier_hz) {
    if (!(carrier_hz > 0.0))
        throw ValidationError("carrier frequency must be positive");
    return kSpeedOfLight / carrier_hz;
}

LinkGeometry link_geometry(const GeoPoint& gs, const GeoPoint& uav, double wavelength) {
    if (gs.alt < 0.0 || uav.alt < 0.0)
        throw ValidationError("antenna heights above ground must be non-negative");
    if (!(wavelength > 0.0))
        throw ValidationError("wavelength must be positive");

    LinkGeometry g;
    g.d_h = horizontal_distance(gs, uav);
    g.d_v = vertical_distance(gs, uav);
    g.d_3d = std::hypot(g.d_h, g.d_v);
    if (g.d_3d == 0.0)
        throw DegenerateLink("ground station and UAV coincide");

    const double h_gs = gs.alt;
    const double h_uav = uav.alt;

    g.theta_t = rad2deg(std::atan2(h_uav - h_gs, g.d_h));
    g.theta_r = g.theta_t;
    g.phi_t = bearing_deg(gs, uav);
    g.phi_r = std::fmod(g.phi_t + 180.0, 360.0);

    // Image source at -h_gs; the specular point splits d_h in ratio h_gs : h_uav.
    const double h_sum = h_gs + h_uav;
    const double x_spec = h_sum > 0.0 ? g.d_h * h_gs / h_sum : 0.5 * g.d_h;
    g.d1 = std::hypot(x_spec, h_gs);
    g.d2 = std::hypot(g.d_h - x_spec, h_uav);
    g.theta_ref = rad2deg(std::atan2(h_sum, g.d_h));

    // (d1 + d2)^2 - d_3d^2 = 4 h_gs h_uav, rearranged to avoid cancellation.
    const double excess = 4.0 * h_gs * h_uav / (g.d1 + g.d2 + g.d_3d);
    g.delta_tau = 2.0 * std::numbers::pi * excess / wavelength;

    g.theta_t1 = -g.theta_ref;
    g.theta_r1 = g.theta_ref;
    g.phi_t1 = g.phi_t;
    g.phi_r1 = g.phi_r;
    return g;
}

LocalFrame::LocalFrame(const GeoPoint& origin) : origin_(origin), cos_lat_(std::cos(deg2rad(origin.lat))) {}

LocalXY LocalFrame::to_local(const GeoPoint& p) const {
    return {kEarthRadiusM * deg2rad(p.lon - origin_.lon) * cos_lat_, kEarthRadiusM * deg2rad(p.lat - origin_.lat)};
}

GeoPoint LocalFrame::to_geo(const LocalXY& xy, double alt) const {
    return {origin_.lat + rad2deg(xy.north / kEarthRadiusM), origin_.lon + rad2deg(xy.east / (kEarthRadiusM * cos_lat_)),
            alt};
}

} // namespace remkit
