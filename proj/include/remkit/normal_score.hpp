#pragma once

#include <span>
#include <vector>

namespace remkit {

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Butland slopes),
/// extended linearly beyond the end nodes with the end-interval secant slope.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    /// x strictly ascending, y monotone (non-decreasing), at least 2 nodes.
    MonotoneCubic(std::vector<double> x, std::vector<double> y);

    double operator()(double x) const;
    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& y() const { return y_; }

private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> d_;
};

double standard_normal_cdf(double x);
double standard_normal_quantile(double p);

/// Normal-score transform pair built from a sample:
/// forward f maps values to standard-normal scores through the Hazen
/// plotting position (k - 0.5)/n, inverse phi maps scores back. Tied values
/// share the average of their scores.
class NormalScore {
public:
    static constexpr std::size_t kMinSamples = 20;

    /// Throws InsufficientData below kMinSamples values.
    explicit NormalScore(std::span<const double> values);

    double forward(double z) const { return forward_(z); }
    double inverse(double u) const { return inverse_(u); }
    /// Central second difference of the inverse with step h on the score axis.
    double inverse_second_derivative(double u, double h = 1e-3) const;

    const std::vector<double>& z_nodes() const { return forward_.x(); }
    const std::vector<double>& u_nodes() const { return forward_.y(); }

private:
    MonotoneCubic forward_;
    MonotoneCubic inverse_;
};

} // namespace remkit
