#pragma once

#include "remkit/propagation.hpp"
#include "remkit/shadow_stats.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace remkit {

/// Localized fade: depth_db at the center tapering to 0 at radius_m along a
/// raised cosine of the horizontal distance.
struct BlobSpec {
    GeoPoint center;
    double radius_m = 50.0;
    double depth_db = -10.0;

    double offset_db(const GeoPoint& p) const;
};

/// Constant gain offset over an (azimuth, elevation) box, e.g. airframe blockage.
struct SectorDistortion {
    double az_min_deg = 0.0;
    double az_max_deg = 0.0;
    double el_min_deg = -90.0;
    double el_max_deg = 90.0;
    double delta_db = 0.0;
};

/// Fully supported delta table with `delta_db` in every bin whose center lies
/// inside a sector (later sectors win).
CalibratedDelta make_sector_distortion(double bin_deg, std::span<const SectorDistortion> sectors);

struct SceneSpec {
    GeoPoint gs;
    PropagationConfig cfg;
    CorrelationModel corr;
    double noise_sd = 0.0; ///< white measurement noise, dB
    std::vector<BlobSpec> blobs;
    std::optional<CalibratedDelta> pattern_distortion; ///< added to the UAV gain of both rays
    std::uint64_t seed = 1;

    void validate() const;
};

enum class TrajectoryKind { zigzag, lawnmower, ring, custom };

struct Trajectory {
    std::vector<GeoPoint> waypoints; ///< measurement locations, in flight order
    TrajectoryKind kind = TrajectoryKind::custom;
    double sample_spacing_m = 5.0;

    /// Lanes along east-west across a width x height rectangle centered on
    /// `center`, joined by short north steps; lane_spacing is rounded to a
    /// multiple of the sample spacing.
    static Trajectory lawnmower(const GeoPoint& center, double width_m, double height_m, double lane_spacing_m,
                                double altitude_m, double sample_spacing_m);
    /// Diagonal sweeps bouncing between the west and east edges.
    static Trajectory zigzag(const GeoPoint& center, double width_m, double height_m, int legs, double altitude_m,
                             double sample_spacing_m);
    static Trajectory ring(const GeoPoint& center, double radius_m, double altitude_m, double sample_spacing_m);
    /// Resamples a polyline through `vertices`; each segment keeps its end points.
    static Trajectory custom(std::span<const GeoPoint> vertices, double sample_spacing_m);

    /// Concatenation, e.g. the same pattern flown at several altitudes.
    static Trajectory concat(std::span<const Trajectory> parts);
    Trajectory at_altitude(double altitude_m) const;
};

std::string to_string(TrajectoryKind kind);
TrajectoryKind trajectory_kind_from_string(const std::string& name);

/// Maximum point count for dense covariance factorization.
inline constexpr std::size_t kMaxFieldPoints = 5000;

/// Draws a zero-mean Gaussian field with covariance sigma_z^2 R at `points`.
/// Coincident points receive identical values. Throws TooManyPoints above
/// kMaxFieldPoints distinct locations.
std::vector<double> sample_correlated_field(std::span<const GeoPoint> points, const CorrelationModel& corr,
                                            std::uint64_t seed);

struct Campaign;

/// Noise-free truth of a generated scene: TRPL power (with any pattern
/// distortion), shadow fading and blob offsets. Shadow fading is the drawn
/// value at sampled locations and the conditional mean elsewhere.
class TruthField {
public:
    TruthField(SceneSpec spec, std::vector<GeoPoint> locations, std::vector<double> sf);

    double deterministic_dbm(const GeoPoint& p) const;
    double shadow_fading_db(const GeoPoint& p) const;
    double blob_db(const GeoPoint& p) const;
    double rsrp_dbm(const GeoPoint& p) const;

    const SceneSpec& spec() const { return spec_; }

private:
    friend std::vector<Campaign> generate_campaigns(const SceneSpec&, std::span<const Trajectory>);
    TruthField(SceneSpec spec, std::vector<GeoPoint> unique_locations, std::vector<double> sf, Eigen::VectorXd alpha);

    SceneSpec spec_;
    std::vector<GeoPoint> locations_;
    std::vector<double> sf_;
    Eigen::VectorXd alpha_; ///< C^{-1} sf, for conditional means
};

struct Campaign {
    std::vector<Measurement> measurements;
    std::shared_ptr<const TruthField> truth;
};

/// Measurements along a trajectory; seq numbers follow flight order.
Campaign generate_campaign(const SceneSpec& scene, const Trajectory& traj);

/// Several campaigns over one shared field realization (e.g. train and test
/// flights of the same scene).
std::vector<Campaign> generate_campaigns(const SceneSpec& scene, std::span<const Trajectory> trajectories);

} // namespace remkit
