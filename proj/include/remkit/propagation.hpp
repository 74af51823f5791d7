#pragma once

#include "remkit/geo.hpp"

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace remkit {

/// Tabulated antenna gain in dBi over an (azimuth x elevation) grid.
struct AntennaPattern {
    std::vector<double> az_grid; ///< degrees, strictly ascending, span < 360
    std::vector<double> el_grid; ///< degrees, strictly ascending within [-90, 90]
    Eigen::MatrixXd gain;        ///< dBi, rows = az, cols = el
    std::string label;

    static AntennaPattern isotropic();
    /// Vertical half-wave dipole, omnidirectional in azimuth, 2.15 dBi peak at
    /// the horizon and floored at `floor_dbi` toward the axis.
    static AntennaPattern half_wave_dipole(double el_step_deg = 1.0, double floor_dbi = -40.0);

    void validate() const;
};

/// Bilinear lookup with azimuth wrap-around and elevation clamped to the grid.
double gain_at(const AntennaPattern& p, double az_deg, double el_deg);

/// Binned dB gain correction over (azimuth, elevation); bins below
/// `min_support` samples read as zero.
struct CalibratedDelta {
    double bin_deg = 5.0;
    std::vector<double> az_grid; ///< bin centers, starting at bin_deg / 2
    std::vector<double> el_grid; ///< bin centers, starting at -90 + bin_deg / 2
    Eigen::MatrixXd delta_db;    ///< rows = az, cols = el
    Eigen::MatrixXi support;
    int min_support = 25;

    /// Zero-valued table with every bin fully supported.
    static CalibratedDelta zeros(double bin_deg);

    bool supported(Eigen::Index ai, Eigen::Index ei) const { return support(ai, ei) >= min_support; }
    /// Correction in dB at (az, el); 0 outside the table or in unsupported bins.
    double at(double az_deg, double el_deg) const;
    /// Bin indices containing (az, el), or nullopt when el falls outside the table.
    std::optional<std::pair<Eigen::Index, Eigen::Index>> bin_of(double az_deg, double el_deg) const;
};

enum class Polarization { vertical, horizontal };

struct PropagationConfig {
    double carrier_hz = 3.5e9;
    double tx_power_dbm = 0.0;
    double ground_rel_permittivity = 15.0;
    Polarization polarization = Polarization::vertical;
    AntennaPattern gs_pattern = AntennaPattern::isotropic();
    AntennaPattern uav_pattern = AntennaPattern::isotropic();
    double path_loss_ceiling_db = 300.0;
    /// Overrides the Fresnel coefficient (e.g. 0 to disable the ground ray).
    std::optional<std::complex<double>> forced_gamma;

    double wavelength() const { return wavelength_m(carrier_hz); }
    void validate() const;
};

/// Fresnel reflection coefficient of a lossless dielectric half-space at
/// grazing angle theta_ref (degrees above the ground plane).
std::complex<double> reflection_coefficient(double theta_ref_deg, double eps_r, Polarization pol);

/// Linear received-to-transmitted power ratio of the two-ray model.
/// `uav_distortion`, when given, is added (in dB) to the UAV gain of both rays.
double trpl_attenuation(const PropagationConfig& cfg, const LinkGeometry& geom,
                        const CalibratedDelta* uav_distortion = nullptr);

/// -10 log10 of the attenuation, capped at cfg.path_loss_ceiling_db.
double trpl_path_loss_db(const PropagationConfig& cfg, const LinkGeometry& geom,
                         const CalibratedDelta* uav_distortion = nullptr);

double trpl_received_power_db(const PropagationConfig& cfg, const LinkGeometry& geom,
                              const CalibratedDelta* uav_distortion = nullptr);

/// Two-ray received power plus the UAV gain correction at (phi_r, theta_r).
double calibrated_received_power_db(const PropagationConfig& cfg, const LinkGeometry& geom,
                                    const CalibratedDelta& delta_gain);

double free_space_path_loss_db(double d_3d, double wavelength);

/// Deterministic received-power predictor for a fixed ground station.
struct PowerModel {
    PropagationConfig cfg;
    GeoPoint gs;
    std::optional<CalibratedDelta> delta_gain;

    double received_power_dbm(const GeoPoint& uav) const;
};

} // namespace remkit
