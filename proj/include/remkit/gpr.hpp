#pragma once

#include "remkit/shadow_stats.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace remkit {

struct GprPrediction {
    double z_hat = 0.0;
    double variance = 0.0;
    bool clamped = false; ///< raw variance was negative and clamped to zero
};

/// Zero-mean Gaussian process over shadow fading: latent field with covariance
/// sigma_y^2 R plus white measurement noise sigma_gp^2. The kernel matrix is
/// factorized once at construction and reused for every prediction; the cost
/// is cubic in the number of training samples.
class GprModel {
public:
    GprModel(std::vector<SfSample> samples, CorrelationModel corr, double sigma_y, double sigma_gp);

    GprPrediction predict(const GeoPoint& target) const;
    /// Weights applied to the training values for this target.
    Eigen::VectorXd weights(const GeoPoint& target) const;

    const std::vector<SfSample>& samples() const { return samples_; }
    const CorrelationModel& correlation_model() const { return corr_; }
    double sigma_y() const { return sigma_y_; }
    double sigma_gp() const { return sigma_gp_; }

private:
    Eigen::VectorXd cross_covariance(const GeoPoint& target) const;

    std::vector<SfSample> samples_;
    CorrelationModel corr_;
    double sigma_y_;
    double sigma_gp_;
    Eigen::LLT<Eigen::MatrixXd> factor_;
    Eigen::VectorXd alpha_; ///< K^{-1} z
};

/// Throws DuplicateLocations when sigma_gp == 0 and two samples coincide,
/// SingularSystem if the kernel matrix is otherwise not positive definite.
GprModel gpr_fit(std::vector<SfSample> samples, const CorrelationModel& corr, double sigma_y, double sigma_gp);

GprPrediction gpr_predict(const GprModel& model, const GeoPoint& target);

struct GprHyperparameters {
    double sigma_y = 0.0;
    double sigma_gp = 0.0;
};

/// Splits the sample variance into latent and nugget parts. The nugget is
/// sigma_Z^2 (1 - R0), where R0 is the lag-0 intercept of a straight line
/// through the three shortest non-empty horizontal bins; vertical decay is
/// divided out with corr.q. Nugget variance is clamped to [0, 0.9 sigma_Z^2].
GprHyperparameters estimate_hyperparameters(std::span<const SfSample> samples, const CorrelationModel& corr,
                                            double bin_width_m = 20.0, double max_lag_m = 400.0);

} // namespace remkit
