#include "remkit/shadow_stats.hpp"

#include "nelder_mead.hpp"
#include "remkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace remkit {

void CorrelationModel::validate() const {
    if (!(a >= 0.0 && a <= 1.0))
        throw ValidationError("correlation weight a must lie in [0, 1]");
    if (!(p1 >= 0.0 && p2 >= 0.0 && q >= 0.0))
        throw ValidationError("correlation decay rates must be non-negative");
    if (!(sigma_z >= 0.0) || !std::isfinite(sigma_z))
        throw ValidationError("sigma_z must be finite and non-negative");
}

double CorrelationModel::rho(double d_h, double d_v) const {
    return std::exp(-q * d_v) * (a * std::exp(-p1 * d_h) + (1.0 - a) * std::exp(-p2 * d_h));
}

double correlation(const CorrelationModel& model, const GeoPoint& li, const GeoPoint& lj) {
    return model.rho(horizontal_distance(li, lj), vertical_distance(li, lj));
}

double covariance(const CorrelationModel& model, const GeoPoint& li, const GeoPoint& lj) {
    return model.sigma_z * model.sigma_z * correlation(model, li, lj);
}

double semivariogram(const CorrelationModel& model, const GeoPoint& li, const GeoPoint& lj) {
    return model.sigma_z * model.sigma_z * (1.0 - correlation(model, li, lj));
}

std::vector<SfSample> extract_sf(std::span<const Measurement> measurements, const PowerModel& model) {
    std::vector<SfSample> out;
    out.reserve(measurements.size());
    for (const auto& m : measurements)
        out.push_back({m.location, m.rsrp_dbm - model.received_power_dbm(m.location), m.seq});
    return out;
}

std::vector<SfSample> extract_sf(std::span<const Measurement> measurements, const PropagationConfig& cfg,
                                 const GeoPoint& gs, const CalibratedDelta* delta_gain) {
    PowerModel model{cfg, gs, std::nullopt};
    if (delta_gain)
        model.delta_gain = *delta_gain;
    return extract_sf(measurements, model);
}

double estimate_sigma(std::span<const double> values) {
    if (values.size() < 2)
        throw InsufficientData("standard deviation needs at least 2 samples");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values)
        ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (n - 1.0));
}

double estimate_sigma(std::span<const SfSample> sf) {
    std::vector<double> z(sf.size());
    std::transform(sf.begin(), sf.end(), z.begin(), [](const SfSample& s) { return s.z; });
    return estimate_sigma(std::span<const double>(z));
}

double sample_mean(std::span<const SfSample> sf) {
    if (sf.empty())
        throw InsufficientData("mean of an empty sample set");
    double s = 0.0;
    for (const auto& x : sf)
        s += x.z;
    return s / static_cast<double>(sf.size());
}

CorrelationBinning CorrelationBinning::uniform(double dh_step, double dh_max, double dv_step, double dv_max) {
    if (!(dh_step > 0.0 && dv_step > 0.0 && dh_max >= dh_step && dv_max >= dv_step))
        throw ValidationError("invalid correlation binning");
    CorrelationBinning b;
    for (double e = 0.0; e <= dh_max + 1e-9; e += dh_step)
        b.dh_edges.push_back(e);
    for (double e = 0.0; e <= dv_max + 1e-9; e += dv_step)
        b.dv_edges.push_back(e);
    return b;
}

CorrelationBinning CorrelationBinning::defaults() { return uniform(20.0, 400.0, 10.0, 40.0); }

std::size_t CorrelationTable::non_empty() const {
    return static_cast<std::size_t>(std::count_if(bins.begin(), bins.end(), [](const auto& b) { return !b.empty(); }));
}

namespace {

// Index of the half-open bin [edges[k], edges[k+1]) holding x, or npos.
std::size_t find_bin(const std::vector<double>& edges, double x) {
    if (x < edges.front() || x >= edges.back())
        return std::numeric_limits<std::size_t>::max();
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    return static_cast<std::size_t>(it - edges.begin()) - 1;
}

struct BinAccumulator {
    double sum = 0.0;
    double sum_dh = 0.0;
    double sum_dv = 0.0;
    std::size_t count = 0;
};

} // namespace

CorrelationTable empirical_correlation(std::span<const SfSample> sf, const CorrelationBinning& binning) {
    if (sf.size() < 2)
        throw InsufficientData("empirical correlation needs at least 2 samples");
    if (binning.dh_edges.size() < 2 || binning.dv_edges.size() < 2)
        throw ValidationError("correlation binning needs at least one bin per axis");

    CorrelationTable table;
    table.dh_edges = binning.dh_edges;
    table.dv_edges = binning.dv_edges;
    table.sigma = estimate_sigma(sf);
    table.mean = sample_mean(sf);

    const std::size_t n = sf.size();
    const std::size_t total = n * (n - 1) / 2;
    const std::size_t cap = std::max<std::size_t>(binning.max_pairs, 1);
    table.stride = (total + cap - 1) / cap;
    if (table.stride == 0)
        table.stride = 1;

    std::vector<BinAccumulator> acc(table.n_dh() * table.n_dv());
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double zi = sf[i].z - table.mean;
        for (std::size_t j = i + 1; j < n; ++j, ++k) {
            if (k % table.stride != 0)
                continue;
            ++table.pairs_visited;
            const double dh = horizontal_distance(sf[i].location, sf[j].location);
            const std::size_t ih = find_bin(table.dh_edges, dh);
            if (ih == std::numeric_limits<std::size_t>::max())
                continue;
            const double dv = vertical_distance(sf[i].location, sf[j].location);
            const std::size_t iv = find_bin(table.dv_edges, dv);
            if (iv == std::numeric_limits<std::size_t>::max())
                continue;
            auto& a = acc[ih * table.n_dv() + iv];
            a.sum += zi * (sf[j].z - table.mean);
            a.sum_dh += dh;
            a.sum_dv += dv;
            ++a.count;
        }
    }

    const double var = table.sigma * table.sigma;
    table.bins.resize(acc.size());
    for (std::size_t b = 0; b < acc.size(); ++b) {
        auto& out = table.bins[b];
        out.count = acc[b].count;
        if (out.count == 0)
            continue;
        const double c = static_cast<double>(out.count);
        out.value = var > 0.0 ? acc[b].sum / (c * var) : 0.0;
        out.mean_dh = acc[b].sum_dh / c;
        out.mean_dv = acc[b].sum_dv / c;
    }
    return table;
}

double correlation_fit_residual(const CorrelationTable& table, const CorrelationModel& model) {
    double num = 0.0;
    double den = 0.0;
    for (const auto& b : table.bins) {
        if (b.empty())
            continue;
        const double w = static_cast<double>(b.count);
        const double r = model.rho(b.mean_dh, b.mean_dv) - b.value;
        num += w * r * r;
        den += w;
    }
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

CorrelationModel fit_correlation_model(const CorrelationTable& table, bool fix_a_one) {
    CorrelationFitOptions options;
    options.fix_a_one = fix_a_one;
    return fit_correlation_model(table, options);
}

CorrelationModel fit_correlation_model(const CorrelationTable& table, const CorrelationFitOptions& options) {
    if (table.non_empty() < 6)
        throw InsufficientData("correlation fit needs at least 6 non-empty bins, got " +
                               std::to_string(table.non_empty()));
    std::size_t dh_bins_used = 0;
    for (std::size_t ih = 0; ih < table.n_dh(); ++ih) {
        for (std::size_t iv = 0; iv < table.n_dv(); ++iv) {
            if (!table.bin(ih, iv).empty()) {
                ++dh_bins_used;
                break;
            }
        }
    }
    if (dh_bins_used < 2)
        throw InsufficientData("correlation fit needs pairs in at least two horizontal-distance bins");

    // Vertical rate is only identifiable when some pairs are vertically separated.
    bool has_vertical = false;
    for (const auto& b : table.bins)
        if (!b.empty() && b.mean_dv > 1e-6)
            has_vertical = true;

    const double lo = std::log(options.min_rate);
    const double hi = std::log(options.max_rate);
    const auto rate = [&](double log_rate) { return std::exp(std::clamp(log_rate, lo, hi)); };

    // Parameter vector layout: [a?, log p1, log p2?, log q?].
    const bool fit_a = !options.fix_a_one;
    auto unpack = [&](const Eigen::VectorXd& x) {
        CorrelationModel m;
        m.sigma_z = table.sigma;
        Eigen::Index k = 0;
        m.a = fit_a ? std::clamp(x[k++], 0.0, 1.0) : 1.0;
        m.p1 = rate(x[k++]);
        m.p2 = fit_a ? rate(x[k++]) : m.p1;
        m.q = has_vertical ? rate(x[k++]) : 0.0;
        return m;
    };
    auto objective = [&](const Eigen::VectorXd& x) {
        const double r = correlation_fit_residual(table, unpack(x));
        return r * r;
    };

    std::vector<double> a_starts = fit_a ? std::vector<double>{0.25, 0.5, 0.75, 1.0} : std::vector<double>{1.0};
    std::vector<double> p1_starts{0.1, 0.01};
    std::vector<double> p2_starts = fit_a ? std::vector<double>{0.01, 0.001} : std::vector<double>{0.0};
    std::vector<double> q_starts = has_vertical ? std::vector<double>{0.1, 0.01} : std::vector<double>{0.0};

    detail::SimplexResult best;
    best.f = std::numeric_limits<double>::infinity();
    for (double a0 : a_starts)
        for (double p10 : p1_starts)
            for (double p20 : p2_starts)
                for (double q0 : q_starts) {
                    std::vector<double> x;
                    if (fit_a)
                        x.push_back(a0);
                    x.push_back(std::log(p10));
                    if (fit_a)
                        x.push_back(std::log(p20));
                    if (has_vertical)
                        x.push_back(std::log(q0));
                    const Eigen::VectorXd x0 = Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
                    auto res = detail::nelder_mead(objective, x0, 0.5, 1e-10, 4000);
                    if (res.f < best.f)
                        best = res;
                }

    // Polish: restart from the incumbent with shrinking steps until it stalls.
    for (double step : {0.2, 0.05, 0.01, 0.002}) {
        for (int rep = 0; rep < 4; ++rep) {
            auto res = detail::nelder_mead(objective, best.x, step, 1e-15, 20000);
            const bool improved = res.f < best.f * (1.0 - 1e-12);
            if (res.f < best.f)
                best = res;
            if (!improved)
                break;
        }
    }

    CorrelationModel m = unpack(best.x);
    if (m.p2 > m.p1) {
        std::swap(m.p1, m.p2);
        m.a = 1.0 - m.a;
    }
    const double residual = std::sqrt(best.f);
    if (!(residual <= options.divergence_threshold))
        throw FitDiverged("correlation fit residual " + std::to_string(residual) + " exceeds threshold " +
                          std::to_string(options.divergence_threshold));
    return m;
}

} // namespace remkit
