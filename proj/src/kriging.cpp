#include "remkit/kriging.hpp"

#include "remkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace remkit {

namespace {

constexpr double kSingularRcond = 1e-13;

bool is_tg(KrigingVariant v) { return v == KrigingVariant::TG_OK || v == KrigingVariant::TG_SK; }

double clamp_mse(double mse) { return mse < 0.0 ? 0.0 : mse; }

std::vector<std::size_t> order_by_distance(std::vector<std::size_t> idx, const std::vector<double>& dist,
                                           std::span<const SfSample> samples) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t r) {
        if (dist[l] != dist[r])
            return dist[l] < dist[r];
        if (samples[l].seq != samples[r].seq)
            return samples[l].seq < samples[r].seq;
        return l < r;
    });
    return idx;
}

struct NeighborSystem {
    Eigen::MatrixXd r_nn;
    Eigen::VectorXd r_0;
    Eigen::VectorXd z;
};

NeighborSystem assemble(std::span<const SfSample> samples, const std::vector<std::size_t>& nb,
                        const CorrelationModel& model, const GeoPoint& target) {
    const auto k = static_cast<Eigen::Index>(nb.size());
    NeighborSystem s{Eigen::MatrixXd(k, k), Eigen::VectorXd(k), Eigen::VectorXd(k)};
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto& li = samples[nb[static_cast<std::size_t>(i)]].location;
        s.z[i] = samples[nb[static_cast<std::size_t>(i)]].z;
        s.r_0[i] = correlation(model, target, li);
        s.r_nn(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j)
            s.r_nn(i, j) = s.r_nn(j, i) = correlation(model, li, samples[nb[static_cast<std::size_t>(j)]].location);
    }
    return s;
}

double tg_back_transform(const NormalScore& transform, const KrigingPrediction& in_u, double m_u,
                         const Eigen::VectorXd& c_0, KrigingVariant variant, double step) {
    const double phi2 = transform.inverse_second_derivative(m_u, step);
    const double base = transform.inverse(in_u.z_hat);
    if (variant == KrigingVariant::TG_OK)
        return base + phi2 * (in_u.mse / 2.0 - in_u.lagrange_mu);
    double wc = 0.0;
    for (std::size_t i = 0; i < in_u.weights.size(); ++i)
        wc += in_u.weights[i] * c_0[static_cast<Eigen::Index>(i)];
    return base + 0.5 * phi2 * (in_u.mse - wc);
}

// Kriging in the score domain for neighbor scores `u` with the score-domain
// correlation shape; sigma_U and m_U are taken from the neighbor set.
KrigingPrediction tg_solve(const NormalScore& transform, const Eigen::MatrixXd& r_nn, const Eigen::VectorXd& r_0,
                           const Eigen::VectorXd& u, double fallback_sigma, KrigingVariant variant, double jitter,
                           double curvature_step) {
    const auto k = u.size();
    const double m_u = u.mean();
    double sigma_u = fallback_sigma;
    if (k >= 2) {
        const double s = std::sqrt((u.array() - m_u).square().sum() / static_cast<double>(k - 1));
        if (s > 0.0)
            sigma_u = s;
    }
    const double s2 = sigma_u * sigma_u;
    KrigingPrediction p = variant == KrigingVariant::TG_OK ? detail::solve_ordinary(r_nn, r_0, u, s2, jitter)
                                                           : detail::solve_simple(r_nn, r_0, u, s2, m_u, jitter);
    const Eigen::VectorXd c_0 = s2 * r_0;
    const double step = curvature_step > 0.0 ? curvature_step : std::max(1e-3, std::sqrt(3.0) * sigma_u);
    const double z_hat = tg_back_transform(transform, p, m_u, c_0, variant, step);
    // Delta-method MSE in the original domain.
    const double h = 1e-3;
    const double slope = (transform.inverse(p.z_hat + h) - transform.inverse(p.z_hat - h)) / (2.0 * h);
    p.z_hat = z_hat;
    p.mse = clamp_mse(slope * slope * p.mse);
    return p;
}

} // namespace

void KrigingConfig::validate() const {
    if (!(radius_m > 0.0))
        throw ValidationError("Kriging radius must be positive");
    if (!(jitter >= 0.0))
        throw ValidationError("Kriging jitter must be non-negative");
    if (!(curvature_step >= 0.0))
        throw ValidationError("curvature step must be non-negative");
}

std::vector<std::size_t> select_neighbors(std::span<const SfSample> samples, const GeoPoint& target, double radius_m) {
    std::vector<double> dist(samples.size());
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        dist[i] = horizontal_distance(samples[i].location, target);
        if (dist[i] <= radius_m)
            idx.push_back(i);
    }
    if (idx.empty())
        throw NoNeighbors("no samples within " + std::to_string(radius_m) + " m of the target");
    return order_by_distance(std::move(idx), dist, samples);
}

namespace detail {

KrigingPrediction solve_ordinary(const Eigen::MatrixXd& r_nn, const Eigen::VectorXd& r_0, const Eigen::VectorXd& z,
                                 double sigma2, double jitter) {
    const Eigen::Index k = z.size();
    Eigen::MatrixXd a(k + 1, k + 1);
    a.topLeftCorner(k, k) = sigma2 * (1.0 - r_nn.array()).matrix();
    a.diagonal().head(k).setZero();
    a.col(k).head(k).setOnes();
    a.row(k).head(k).setOnes();
    a(k, k) = 0.0;
    Eigen::VectorXd rhs(k + 1);
    rhs.head(k) = sigma2 * (1.0 - r_0.array()).matrix();
    rhs[k] = 1.0;

    KrigingPrediction p;
    auto attempt = [&]() -> bool {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
        if (!(lu.rcond() > kSingularRcond))
            return false;
        const Eigen::VectorXd x = lu.solve(rhs);
        if (!x.allFinite())
            return false;
        const Eigen::VectorXd w = x.head(k);
        p.weights.assign(w.data(), w.data() + k);
        p.lagrange_mu = x[k];
        p.z_hat = w.dot(z);
        p.mse = clamp_mse(w.dot(rhs.head(k)) + p.lagrange_mu);
        return true;
    };
    if (!attempt()) {
        // A nugget on the semivariogram lowers its diagonal below zero.
        a.diagonal().head(k).setConstant(-jitter);
        p.jittered = true;
        if (jitter <= 0.0 || !attempt())
            throw SingularSystem("ordinary Kriging system is singular");
    }
    p.neighbors_used = static_cast<std::size_t>(k);
    return p;
}

KrigingPrediction solve_simple(const Eigen::MatrixXd& r_nn, const Eigen::VectorXd& r_0, const Eigen::VectorXd& z,
                               double sigma2, double mean, double jitter) {
    const Eigen::Index k = z.size();
    Eigen::MatrixXd c = sigma2 * r_nn;
    const Eigen::VectorXd c_0 = sigma2 * r_0;

    KrigingPrediction p;
    auto attempt = [&]() -> bool {
        Eigen::LLT<Eigen::MatrixXd> llt(c);
        if (llt.info() != Eigen::Success || !(llt.rcond() > kSingularRcond))
            return false;
        const Eigen::VectorXd w = llt.solve(c_0);
        if (!w.allFinite())
            return false;
        p.weights.assign(w.data(), w.data() + k);
        p.z_hat = mean + w.dot((z.array() - mean).matrix());
        p.mse = clamp_mse(sigma2 - w.dot(c_0));
        return true;
    };
    if (!attempt()) {
        c.diagonal().array() += jitter;
        p.jittered = true;
        if (jitter <= 0.0 || !attempt())
            throw SingularSystem("simple Kriging system is singular");
    }
    p.neighbors_used = static_cast<std::size_t>(k);
    return p;
}

} // namespace detail

KrigingPrediction ok_predict(std::span<const SfSample> samples, const CorrelationModel& model, const GeoPoint& target,
                             const KrigingConfig& cfg) {
    cfg.validate();
    auto nb = select_neighbors(samples, target, cfg.radius_m);
    const auto sys = assemble(samples, nb, model, target);
    auto p = detail::solve_ordinary(sys.r_nn, sys.r_0, sys.z, model.sigma_z * model.sigma_z, cfg.jitter);
    p.neighbors = std::move(nb);
    return p;
}

KrigingPrediction sk_predict(std::span<const SfSample> samples, const CorrelationModel& model, const GeoPoint& target,
                             const KrigingConfig& cfg) {
    cfg.validate();
    auto nb = select_neighbors(samples, target, cfg.radius_m);
    const auto sys = assemble(samples, nb, model, target);
    auto p = detail::solve_simple(sys.r_nn, sys.r_0, sys.z, model.sigma_z * model.sigma_z, cfg.mean_z, cfg.jitter);
    p.neighbors = std::move(nb);
    return p;
}

KrigingPrediction tg_predict(std::span<const SfSample> samples, const NormalScore& transform,
                             const CorrelationModel& model_u, const GeoPoint& target, const KrigingConfig& cfg) {
    cfg.validate();
    if (!is_tg(cfg.variant))
        throw ValidationError("tg_predict requires a trans-Gaussian variant");
    auto nb = select_neighbors(samples, target, cfg.radius_m);
    auto sys = assemble(samples, nb, model_u, target);
    for (Eigen::Index i = 0; i < sys.z.size(); ++i)
        sys.z[i] = transform.forward(sys.z[i]);
    auto p = tg_solve(transform, sys.r_nn, sys.r_0, sys.z, model_u.sigma_z, cfg.variant, cfg.jitter,
                      cfg.curvature_step);
    p.neighbors = std::move(nb);
    return p;
}

KrigingPredictor::KrigingPredictor(std::vector<SfSample> samples, CorrelationModel model, KrigingConfig cfg,
                                   std::optional<CorrelationModel> model_u)
    : samples_(std::move(samples)), model_(model), model_u_(model_u.value_or(model)), cfg_(cfg) {
    cfg_.validate();
    const auto n = static_cast<Eigen::Index>(samples_.size());
    dh_.resize(n, n);
    dv_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        dh_(i, i) = dv_(i, i) = 0.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const auto& a = samples_[static_cast<std::size_t>(i)].location;
            const auto& b = samples_[static_cast<std::size_t>(j)].location;
            dh_(i, j) = dh_(j, i) = horizontal_distance(a, b);
            dv_(i, j) = dv_(j, i) = vertical_distance(a, b);
        }
    }
    if (is_tg(cfg_.variant) && samples_.size() >= NormalScore::kMinSamples) {
        std::vector<double> z(samples_.size());
        std::transform(samples_.begin(), samples_.end(), z.begin(), [](const SfSample& s) { return s.z; });
        try {
            transform_.emplace(z);
            u_.resize(z.size());
            std::transform(z.begin(), z.end(), u_.begin(), [&](double v) { return transform_->forward(v); });
        } catch (const InsufficientData&) {
            transform_.reset();
        }
    }
}

KrigingPrediction KrigingPredictor::predict(const GeoPoint& target) const {
    std::vector<double> dist(samples_.size());
    std::vector<std::size_t> nb;
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        dist[i] = horizontal_distance(samples_[i].location, target);
        if (dist[i] <= cfg_.radius_m)
            nb.push_back(i);
    }
    if (nb.empty()) {
        KrigingPrediction p;
        p.fallback = true;
        p.z_hat = 0.0;
        p.mse = model_.sigma_z * model_.sigma_z;
        return p;
    }
    nb = order_by_distance(std::move(nb), dist, samples_);

    const bool tg = is_tg(cfg_.variant) && transform_.has_value();
    const CorrelationModel& m = tg ? model_u_ : model_;
    const auto k = static_cast<Eigen::Index>(nb.size());
    Eigen::MatrixXd r_nn(k, k);
    Eigen::VectorXd r_0(k), z(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto si = static_cast<Eigen::Index>(nb[static_cast<std::size_t>(i)]);
        z[i] = tg ? u_[static_cast<std::size_t>(si)] : samples_[static_cast<std::size_t>(si)].z;
        r_0[i] = m.rho(dist[static_cast<std::size_t>(si)], vertical_distance(samples_[static_cast<std::size_t>(si)].location, target));
        for (Eigen::Index j = 0; j <= i; ++j) {
            const auto sj = static_cast<Eigen::Index>(nb[static_cast<std::size_t>(j)]);
            r_nn(i, j) = r_nn(j, i) = i == j ? 1.0 : m.rho(dh_(si, sj), dv_(si, sj));
        }
    }

    KrigingPrediction p;
    const double s2 = model_.sigma_z * model_.sigma_z;
    switch (cfg_.variant) {
    case KrigingVariant::OK:
        p = detail::solve_ordinary(r_nn, r_0, z, s2, cfg_.jitter);
        break;
    case KrigingVariant::SK:
        p = detail::solve_simple(r_nn, r_0, z, s2, cfg_.mean_z, cfg_.jitter);
        break;
    case KrigingVariant::TG_OK:
    case KrigingVariant::TG_SK:
        if (tg) {
            p = tg_solve(*transform_, r_nn, r_0, z, model_u_.sigma_z, cfg_.variant, cfg_.jitter,
                         cfg_.curvature_step);
        } else if (cfg_.variant == KrigingVariant::TG_OK) {
            p = detail::solve_ordinary(r_nn, r_0, z, s2, cfg_.jitter);
            p.variant_fallback = true;
        } else {
            p = detail::solve_simple(r_nn, r_0, z, s2, cfg_.mean_z, cfg_.jitter);
            p.variant_fallback = true;
        }
        break;
    }
    p.neighbors = std::move(nb);
    return p;
}

} // namespace remkit
