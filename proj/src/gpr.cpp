#include "remkit/gpr.hpp"

#include "remkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace remkit {

GprModel::GprModel(std::vector<SfSample> samples, CorrelationModel corr, double sigma_y, double sigma_gp)
    : samples_(std::move(samples)), corr_(corr), sigma_y_(sigma_y), sigma_gp_(sigma_gp) {
    if (samples_.empty())
        throw InsufficientData("GPR needs at least one training sample");
    if (!(sigma_y > 0.0) || !std::isfinite(sigma_y))
        throw ValidationError("sigma_y must be positive");
    if (!(sigma_gp >= 0.0) || !std::isfinite(sigma_gp))
        throw ValidationError("sigma_gp must be non-negative");

    const auto n = static_cast<Eigen::Index>(samples_.size());
    if (sigma_gp_ == 0.0) {
        for (std::size_t i = 0; i < samples_.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (horizontal_distance(samples_[i].location, samples_[j].location) == 0.0 &&
                    vertical_distance(samples_[i].location, samples_[j].location) == 0.0)
                    throw DuplicateLocations(j, i);
    }

    const double sy2 = sigma_y_ * sigma_y_;
    Eigen::MatrixXd k(n, n);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        z[i] = samples_[static_cast<std::size_t>(i)].z;
        k(i, i) = sy2 + sigma_gp_ * sigma_gp_;
        for (Eigen::Index j = 0; j < i; ++j)
            k(i, j) = k(j, i) = sy2 * correlation(corr_, samples_[static_cast<std::size_t>(i)].location,
                                                  samples_[static_cast<std::size_t>(j)].location);
    }
    factor_.compute(k);
    if (factor_.info() != Eigen::Success)
        throw SingularSystem("GPR kernel matrix is not positive definite");
    alpha_ = factor_.solve(z);
    if (!alpha_.allFinite())
        throw SingularSystem("GPR kernel solve produced non-finite values");
}

Eigen::VectorXd GprModel::cross_covariance(const GeoPoint& target) const {
    const auto n = static_cast<Eigen::Index>(samples_.size());
    const double sy2 = sigma_y_ * sigma_y_;
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i)
        c[i] = sy2 * correlation(corr_, target, samples_[static_cast<std::size_t>(i)].location);
    return c;
}

Eigen::VectorXd GprModel::weights(const GeoPoint& target) const { return factor_.solve(cross_covariance(target)); }

GprPrediction GprModel::predict(const GeoPoint& target) const {
    const Eigen::VectorXd c = cross_covariance(target);
    GprPrediction p;
    p.z_hat = c.dot(alpha_);
    // c^T K^{-1} c via one triangular solve: ||L^{-1} c||^2.
    const Eigen::VectorXd half = factor_.matrixL().solve(c);
    const double var = sigma_y_ * sigma_y_ + sigma_gp_ * sigma_gp_ - half.squaredNorm();
    if (var < 0.0) {
        p.variance = 0.0;
        p.clamped = true;
    } else {
        p.variance = var;
    }
    return p;
}

GprModel gpr_fit(std::vector<SfSample> samples, const CorrelationModel& corr, double sigma_y, double sigma_gp) {
    return GprModel(std::move(samples), corr, sigma_y, sigma_gp);
}

GprPrediction gpr_predict(const GprModel& model, const GeoPoint& target) { return model.predict(target); }

GprHyperparameters estimate_hyperparameters(std::span<const SfSample> samples, const CorrelationModel& corr,
                                            double bin_width_m, double max_lag_m) {
    if (samples.size() < 3)
        throw InsufficientData("hyperparameter estimation needs at least 3 samples");
    if (!(bin_width_m > 0.0 && max_lag_m > bin_width_m))
        throw ValidationError("invalid hyperparameter binning");
    const double sigma = estimate_sigma(samples);
    const double var = sigma * sigma;
    if (!(var > 0.0))
        throw InsufficientData("shadow-fading samples have zero variance");
    const double mean = sample_mean(samples);

    const auto n_bins = static_cast<std::size_t>(std::ceil(max_lag_m / bin_width_m));
    std::vector<double> sum(n_bins, 0.0), sum_dh(n_bins, 0.0);
    std::vector<std::size_t> count(n_bins, 0);

    const std::size_t n = samples.size();
    const std::size_t total = n * (n - 1) / 2;
    const std::size_t cap = 2'000'000;
    const std::size_t stride = std::max<std::size_t>(1, (total + cap - 1) / cap);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j, ++k) {
            if (k % stride != 0)
                continue;
            const double dh = horizontal_distance(samples[i].location, samples[j].location);
            if (dh >= max_lag_m)
                continue;
            const auto b = std::min(static_cast<std::size_t>(dh / bin_width_m), n_bins - 1);
            const double vertical = std::exp(-corr.q * vertical_distance(samples[i].location, samples[j].location));
            sum[b] += (samples[i].z - mean) * (samples[j].z - mean) / vertical;
            sum_dh[b] += dh;
            ++count[b];
        }
    }

    std::vector<double> xs, ys;
    for (std::size_t b = 0; b < n_bins && xs.size() < 3; ++b) {
        if (count[b] == 0)
            continue;
        xs.push_back(sum_dh[b] / static_cast<double>(count[b]));
        ys.push_back(sum[b] / (static_cast<double>(count[b]) * var));
    }
    if (xs.empty())
        throw InsufficientData("no sample pairs within the hyperparameter lag range");

    double r0 = ys.front();
    if (xs.size() >= 2) {
        const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
        const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
        }
        r0 = sxx > 0.0 ? my - (sxy / sxx) * mx : my;
    }

    const double nugget = std::clamp(var * (1.0 - r0), 0.0, 0.9 * var);
    return {std::sqrt(var - nugget), std::sqrt(nugget)};
}

} // namespace remkit
