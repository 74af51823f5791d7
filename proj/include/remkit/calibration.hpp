#pragma once

#include "remkit/propagation.hpp"
#include "remkit/shadow_stats.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace remkit {

/// Amplitude ratio sqrt(P_rx / P_tx) of one measurement with its link angles.
struct AmplitudeSample {
    double phi_r = 0.0;   ///< UAV-side azimuth, degrees
    double theta_r = 0.0; ///< UAV-side elevation, degrees
    double phi_t = 0.0;   ///< GS-side azimuth, degrees
    double theta_t = 0.0; ///< GS-side elevation, degrees
    double d_3d = 0.0;
    double amplitude = 0.0;
};

struct AmplitudeEstimate {
    std::vector<AmplitudeSample> samples;
    std::size_t skipped = 0; ///< measurements dropped as degenerate links
};

AmplitudeEstimate estimate_a_uav(std::span<const Measurement> measurements, const GeoPoint& gs, double tx_power_dbm);

/// In-field UAV gain estimate on (azimuth, elevation) bins. `gain` holds dBi
/// in supported bins and NaN elsewhere.
struct EffectivePattern {
    double bin_deg = 5.0;
    int min_support = 25;
    std::vector<double> az_grid; ///< bin centers
    std::vector<double> el_grid;
    Eigen::MatrixXd gain; ///< rows = az, cols = el
    Eigen::MatrixXi support;

    bool supported(Eigen::Index ai, Eigen::Index ei) const { return support(ai, ei) >= min_support; }
    /// The table as a pattern over supported bins only is not generally
    /// rectangular; this fills unsupported bins from `fallback`.
    AntennaPattern to_pattern(const AntennaPattern& fallback) const;
};

/// Per bin: mean over samples of (4 pi / lambda)^2 d^2 A^2 / G_gs(phi_t, theta_t),
/// all in linear units, then converted to dBi. Throws NoSupportedBins when no
/// bin reaches min_support.
EffectivePattern estimate_effective_pattern(std::span<const AmplitudeSample> samples, const AntennaPattern& gs_pattern,
                                            double wavelength, double bin_deg = 5.0, int min_support = 25);

/// Effective minus baseline gain (dB) at each supported bin center; zero and
/// unsupported elsewhere.
CalibratedDelta delta_gain(const EffectivePattern& effective, const AntennaPattern& baseline);

/// Convenience: amplitudes, effective pattern and delta from one campaign.
CalibratedDelta calibrate(std::span<const Measurement> training, const PropagationConfig& cfg, const GeoPoint& gs,
                          double bin_deg = 5.0, int min_support = 25);

struct CampaignSeparation {
    double vertical_separation_m = 0.0; ///< |median altitude difference|
    double trajectory_overlap = 0.0;    ///< fraction of test points within 5 m horizontally of a training point
    bool separated = false;             ///< vertical >= 20 m or overlap <= 5 %
    std::string message;
};

/// Advisory train/test separation check. Throws ValidationError only when the
/// two campaigns are identical.
CampaignSeparation check_campaign_separation(std::span<const Measurement> train, std::span<const Measurement> test);

} // namespace remkit
