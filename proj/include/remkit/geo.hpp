#pragma once

#include <numbers>

namespace remkit {

inline constexpr double kEarthRadiusM = 6'371'000.0;
inline constexpr double kSpeedOfLight = 299'792'458.0;

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Latitude/longitude in degrees, altitude in meters above the (flat) ground datum.
struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;
    double alt = 0.0;

    bool operator==(const GeoPoint&) const = default;
};

/// Throws RangeError unless lat in [-90, 90], lon in [-180, 180], alt finite.
void validate(const GeoPoint& p);

/// Everything the propagation formulas need about one GS-to-UAV link.
///
/// Azimuths are clockwise from true north in [0, 360). Elevations are measured
/// from the local horizontal: at the ground station positive means upward; at
/// the UAV positive means below the airframe horizontal (toward a ground
/// station underneath). With that pairing the LoS elevations coincide,
/// theta_t == theta_r, and the reflected ray has theta_t1 = -theta_ref,
/// theta_r1 = +theta_ref.
struct LinkGeometry {
    double d_h = 0.0;
    double d_v = 0.0;
    double d_3d = 0.0;
    double theta_t = 0.0;
    double theta_r = 0.0;
    double phi_t = 0.0;
    double phi_r = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double theta_ref = 0.0;
    double delta_tau = 0.0;
    double theta_t1 = 0.0;
    double theta_r1 = 0.0;
    double phi_t1 = 0.0;
    double phi_r1 = 0.0;
};

/// Great-circle distance between the ground projections of a and b.
double horizontal_distance(const GeoPoint& a, const GeoPoint& b);

double vertical_distance(const GeoPoint& a, const GeoPoint& b);

/// sqrt(d_h^2 + d_v^2).
double distance_3d(const GeoPoint& a, const GeoPoint& b);

/// Initial bearing from a to b, degrees clockwise from north in [0, 360).
/// Returns 0 when the ground projections coincide.
double bearing_deg(const GeoPoint& from, const GeoPoint& to);

/// Full two-ray geometry using the flat-earth image method for the ground
/// reflection. Altitudes are taken as antenna heights above ground.
/// Throws DegenerateLink when the endpoints coincide and ValidationError on
/// negative heights.
LinkGeometry link_geometry(const GeoPoint& gs, const GeoPoint& uav, double wavelength_m);

double wavelength_m(double carrier_hz);

/// East/north coordinates (meters) on the tangent plane at an origin.
struct LocalXY {
    double east = 0.0;
    double north = 0.0;
};

/// Equirectangular local tangent plane anchored at `origin`; accurate to well
/// below a centimeter across the few-km extents of a single campaign.
class LocalFrame {
public:
    explicit LocalFrame(const GeoPoint& origin);

    LocalXY to_local(const GeoPoint& p) const;
    GeoPoint to_geo(const LocalXY& xy, double alt) const;
    const GeoPoint& origin() const { return origin_; }

private:
    GeoPoint origin_;
    double cos_lat_;
};

} // namespace remkit
