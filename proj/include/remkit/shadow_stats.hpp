#pragma once

#include "remkit/geo.hpp"
#include "remkit/propagation.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace remkit {

struct Measurement {
    GeoPoint location;
    double rsrp_dbm = 0.0;
    std::int64_t seq = 0;
};

/// Shadow-fading residual (dB) at a location.
struct SfSample {
    GeoPoint location;
    double z = 0.0;
    std::int64_t seq = 0;
};

/// Biexponential-in-horizontal, exponential-in-vertical correlation
///   R = exp(-q d_v) [a exp(-p1 d_h) + (1 - a) exp(-p2 d_h)]
/// with marginal standard deviation sigma_z (dB).
struct CorrelationModel {
    double a = 1.0;
    double p1 = 0.01;
    double p2 = 0.01;
    double q = 0.0;
    double sigma_z = 1.0;

    void validate() const;
    double rho(double d_h, double d_v) const;
};

double correlation(const CorrelationModel& model, const GeoPoint& li, const GeoPoint& lj);
/// sigma_z^2 R
double covariance(const CorrelationModel& model, const GeoPoint& li, const GeoPoint& lj);
/// sigma_z^2 (1 - R)
double semivariogram(const CorrelationModel& model, const GeoPoint& li, const GeoPoint& lj);

/// z_i = rsrp_i - predicted power at l_i.
std::vector<SfSample> extract_sf(std::span<const Measurement> measurements, const PowerModel& model);
std::vector<SfSample> extract_sf(std::span<const Measurement> measurements, const PropagationConfig& cfg,
                                 const GeoPoint& gs, const CalibratedDelta* delta_gain = nullptr);

/// Sample standard deviation (n - 1 denominator). Throws InsufficientData below 2 values.
double estimate_sigma(std::span<const SfSample> sf);
double estimate_sigma(std::span<const double> values);

double sample_mean(std::span<const SfSample> sf);

struct CorrelationBinning {
    std::vector<double> dh_edges; ///< meters, ascending, first edge 0
    std::vector<double> dv_edges;
    std::size_t max_pairs = 2'000'000;

    /// 20 m horizontal steps to 400 m, 10 m vertical steps to 40 m.
    static CorrelationBinning defaults();
    static CorrelationBinning uniform(double dh_step, double dh_max, double dv_step, double dv_max);
};

struct CorrelationBin {
    double value = 0.0;   ///< sum z_i z_j / (count sigma^2), mean removed
    double mean_dh = 0.0; ///< average horizontal separation of the pairs
    double mean_dv = 0.0;
    std::size_t count = 0;
    bool empty() const { return count == 0; }
};

struct CorrelationTable {
    std::vector<double> dh_edges;
    std::vector<double> dv_edges;
    std::vector<CorrelationBin> bins; ///< row-major, dh index outer
    double sigma = 0.0;               ///< sample SD used for normalization
    double mean = 0.0;                ///< empirical mean that was removed
    std::size_t pairs_visited = 0;
    std::size_t stride = 1;

    std::size_t n_dh() const { return dh_edges.size() - 1; }
    std::size_t n_dv() const { return dv_edges.size() - 1; }
    CorrelationBin& bin(std::size_t ih, std::size_t iv) { return bins[ih * n_dv() + iv]; }
    const CorrelationBin& bin(std::size_t ih, std::size_t iv) const { return bins[ih * n_dv() + iv]; }
    std::size_t non_empty() const;
};

/// Pairwise binned correlation. Pairs beyond the last edges are ignored; when
/// the pair count exceeds binning.max_pairs a deterministic stride subsamples them.
CorrelationTable empirical_correlation(std::span<const SfSample> sf,
                                       const CorrelationBinning& binning = CorrelationBinning::defaults());

struct CorrelationFitOptions {
    bool fix_a_one = false;
    double min_rate = 1e-6;
    double max_rate = 10.0;
    /// Weighted RMS residual above which the fit is rejected.
    double divergence_threshold = 0.5;
};

/// Count-weighted least squares fit of the correlation model to a table,
/// Nelder-Mead from a multistart grid. Rates are canonicalized so p1 >= p2.
CorrelationModel fit_correlation_model(const CorrelationTable& table, bool fix_a_one = false);
CorrelationModel fit_correlation_model(const CorrelationTable& table, const CorrelationFitOptions& options);

/// Weighted RMS difference between model and table over non-empty bins.
double correlation_fit_residual(const CorrelationTable& table, const CorrelationModel& model);

} // namespace remkit
