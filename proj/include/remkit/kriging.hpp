#pragma once

#include "remkit/normal_score.hpp"
#include "remkit/shadow_stats.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace remkit {

enum class KrigingVariant { OK, SK, TG_OK, TG_SK };

struct KrigingConfig {
    double radius_m = 200.0;
    KrigingVariant variant = KrigingVariant::OK;
    double mean_z = 0.0; ///< prior mean for simple Kriging
    double jitter = 1e-6; ///< dB^2 nugget used only when the first solve is singular
    /// Central-difference step on the score axis for the back-transform
    /// curvature. 0 selects sqrt(3) sigma_U of the neighbor scores (at least
    /// 1e-3), which averages the curvature over the spread the bias term
    /// accounts for instead of resolving interpolation-knot noise.
    double curvature_step = 0.0;

    void validate() const;
};

struct KrigingPrediction {
    double z_hat = 0.0;
    double mse = 0.0;
    std::size_t neighbors_used = 0;
    double lagrange_mu = 0.0;      ///< OK only
    std::vector<double> weights;   ///< in neighbor order
    std::vector<std::size_t> neighbors;
    bool fallback = false;         ///< no neighbors: deterministic model only
    bool jittered = false;         ///< solved on the regularized retry
    bool variant_fallback = false; ///< TG requested but too few samples
};

/// Indices of samples whose horizontal distance to the target is <= radius,
/// ordered by distance with ties broken by seq. Throws NoNeighbors when empty.
std::vector<std::size_t> select_neighbors(std::span<const SfSample> samples, const GeoPoint& target, double radius_m);

/// Ordinary Kriging on the semivariogram system with a Lagrange row.
KrigingPrediction ok_predict(std::span<const SfSample> samples, const CorrelationModel& model, const GeoPoint& target,
                             const KrigingConfig& cfg);

/// Simple Kriging around cfg.mean_z with covariance sigma_z^2 R.
KrigingPrediction sk_predict(std::span<const SfSample> samples, const CorrelationModel& model, const GeoPoint& target,
                             const KrigingConfig& cfg);

/// Trans-Gaussian Kriging: OK or SK (per cfg.variant) on normal scores, then a
/// bias-corrected back-transform. m_U and sigma_U come from the transformed
/// neighbor set. `model_u` supplies the score-domain correlation shape.
KrigingPrediction tg_predict(std::span<const SfSample> samples, const NormalScore& transform,
                             const CorrelationModel& model_u, const GeoPoint& target, const KrigingConfig& cfg);

namespace detail {

/// Solves the OK system for neighbors with pairwise correlation `r_nn` and
/// target correlation `r_0`. Throws SingularSystem if the jittered retry fails too.
KrigingPrediction solve_ordinary(const Eigen::MatrixXd& r_nn, const Eigen::VectorXd& r_0, const Eigen::VectorXd& z,
                                 double sigma2, double jitter);
KrigingPrediction solve_simple(const Eigen::MatrixXd& r_nn, const Eigen::VectorXd& r_0, const Eigen::VectorXd& z,
                               double sigma2, double mean, double jitter);

} // namespace detail

/// Reusable predictor over a fixed sample set: caches pairwise correlations,
/// handles the NoNeighbors fallback and the small-sample TG fallback.
class KrigingPredictor {
public:
    KrigingPredictor(std::vector<SfSample> samples, CorrelationModel model, KrigingConfig cfg,
                     std::optional<CorrelationModel> model_u = std::nullopt);

    KrigingPrediction predict(const GeoPoint& target) const;

    bool transform_available() const { return transform_.has_value(); }
    const std::vector<SfSample>& samples() const { return samples_; }

private:
    std::vector<SfSample> samples_;
    CorrelationModel model_;
    CorrelationModel model_u_;
    KrigingConfig cfg_;
    std::optional<NormalScore> transform_;
    Eigen::MatrixXd dh_;
    Eigen::MatrixXd dv_;
    std::vector<double> u_;
};

} // namespace remkit
