#include "remkit/normal_score.hpp"

#include "remkit/errors.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace remkit {

namespace {

double sign(double v) { return (v > 0.0) - (v < 0.0); }

} // namespace

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
        throw InsufficientData("monotone interpolation needs at least 2 nodes");
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        h[k] = x_[k + 1] - x_[k];
        if (!(h[k] > 0.0))
            throw ValidationError("interpolation nodes must be strictly ascending");
        delta[k] = (y_[k + 1] - y_[k]) / h[k];
    }
    d_.assign(n, 0.0);
    if (n == 2) {
        d_[0] = d_[1] = delta[0];
        return;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (delta[k - 1] * delta[k] <= 0.0)
            continue;
        const double w1 = 2.0 * h[k] + h[k - 1];
        const double w2 = h[k] + 2.0 * h[k - 1];
        d_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (sign(d) != sign(d0))
            d = 0.0;
        else if (sign(d0) != sign(d1) && std::abs(d) > 3.0 * std::abs(d0))
            d = 3.0 * d0;
        return d;
    };
    d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

double MonotoneCubic::operator()(double x) const {
    const std::size_t n = x_.size();
    if (x <= x_.front())
        return y_.front() + (y_[1] - y_[0]) / (x_[1] - x_[0]) * (x - x_.front());
    if (x >= x_.back())
        return y_.back() + (y_[n - 1] - y_[n - 2]) / (x_[n - 1] - x_[n - 2]) * (x - x_.back());
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[k + 1] - x_[k];
    const double t = (x - x_[k]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * y_[k] + h10 * h * d_[k] + h01 * y_[k + 1] + h11 * h * d_[k + 1];
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double standard_normal_quantile(double p) {
    static const boost::math::normal_distribution<double> unit;
    return boost::math::quantile(unit, p);
}

NormalScore::NormalScore(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < kMinSamples)
        throw InsufficientData("normal-score transform needs at least " + std::to_string(kMinSamples) +
                               " samples, got " + std::to_string(n));
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> z, u;
    for (std::size_t k = 0; k < n;) {
        std::size_t e = k;
        double score_sum = 0.0;
        while (e < n && sorted[e] == sorted[k]) {
            score_sum += standard_normal_quantile((static_cast<double>(e) + 0.5) / static_cast<double>(n));
            ++e;
        }
        z.push_back(sorted[k]);
        u.push_back(score_sum / static_cast<double>(e - k));
        k = e;
    }
    if (z.size() < 2)
        throw InsufficientData("normal-score transform needs at least 2 distinct values");
    forward_ = MonotoneCubic(z, u);
    inverse_ = MonotoneCubic(std::move(u), std::move(z));
}

double NormalScore::inverse_second_derivative(double u, double h) const {
    return (inverse_(u + h) - 2.0 * inverse_(u) + inverse_(u - h)) / (h * h);
}

} // namespace remkit
