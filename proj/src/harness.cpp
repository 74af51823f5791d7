#include "remkit/harness.hpp"

#include "remkit/csv_io.hpp"
#include "remkit/errors.hpp"
#include "remkit/kriging.hpp"
#include "remkit/normal_score.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>
#include <tuple>

namespace remkit {

namespace {

constexpr Method kMethods[] = {Method::TRPL_only, Method::OK,  Method::SK,    Method::TG_OK,
                               Method::TG_SK,     Method::GPR, Method::MC_GPR};

struct Prepared {
    PowerModel power;
    CorrelationModel corr;
    CorrelationModel corr_u; ///< score-domain model for the trans-Gaussian variants
    GprHyperparameters hyper;
    double prior_mean = 0.0;
    std::vector<double> deterministic; ///< per test point, dBm
    std::vector<std::size_t> elevation_bin;
    std::size_t n_bins = 0;
    EvalCounters counters;
    std::optional<CampaignSeparation> separation;
};

struct IterationResult {
    double rmse = 0.0;
    std::vector<double> bin_sse;
    std::vector<std::size_t> bin_count;
    EvalCounters counters;
};

// Row order in the input files must not matter, so both campaigns are put
// into (seq, lat, lon, alt) order before anything is drawn or fitted.
bool canonical_less(std::int64_t seq_a, const GeoPoint& a, std::int64_t seq_b, const GeoPoint& b) {
    return std::tie(seq_a, a.lat, a.lon, a.alt) < std::tie(seq_b, b.lat, b.lon, b.alt);
}

class CanonicalCampaign final : public CampaignAccess {
public:
    explicit CanonicalCampaign(const CampaignAccess& base) : base_(base), order_(base.size()) {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::stable_sort(order_.begin(), order_.end(), [&](std::size_t l, std::size_t r) {
            return canonical_less(base_.seq(l), base_.location(l), base_.seq(r), base_.location(r));
        });
    }

    std::size_t size() const override { return order_.size(); }
    const GeoPoint& location(std::size_t i) const override { return base_.location(order_[i]); }
    std::int64_t seq(std::size_t i) const override { return base_.seq(order_[i]); }
    double input_rsrp(std::size_t i) const override { return base_.input_rsrp(order_[i]); }
    double scoring_rsrp(std::size_t i) const override { return base_.scoring_rsrp(order_[i]); }

private:
    const CampaignAccess& base_;
    std::vector<std::size_t> order_;
};

std::vector<Measurement> canonical_rows(std::span<const Measurement> rows) {
    std::vector<Measurement> out(rows.begin(), rows.end());
    std::stable_sort(out.begin(), out.end(), [](const Measurement& l, const Measurement& r) {
        if (canonical_less(l.seq, l.location, r.seq, r.location))
            return true;
        if (canonical_less(r.seq, r.location, l.seq, l.location))
            return false;
        return l.rsrp_dbm < r.rsrp_dbm;
    });
    return out;
}

bool needs_correlation(Method m) { return m != Method::TRPL_only; }
bool is_tg(Method m) { return m == Method::TG_OK || m == Method::TG_SK; }
bool is_gpr(Method m) { return m == Method::GPR || m == Method::MC_GPR; }

Prepared prepare(const EvalConfig& cfg, std::span<const Measurement> train, const CampaignAccess& test) {
    Prepared p;
    p.power.cfg = cfg.propagation;
    p.power.gs = cfg.gs;

    if (!train.empty()) {
        std::vector<Measurement> test_rows;
        test_rows.reserve(test.size());
        for (std::size_t i = 0; i < test.size(); ++i)
            test_rows.push_back({test.location(i), 0.0, test.seq(i)});
        // Test values stay unread here: identity is judged on locations and seq.
        bool same = train.size() == test.size();
        for (std::size_t i = 0; same && i < train.size(); ++i)
            same = train[i].location == test_rows[i].location && train[i].seq == test_rows[i].seq;
        if (same)
            throw ValidationError("training and test campaigns are identical");
        p.separation = check_campaign_separation(train, test_rows);
    }

    if (cfg.model == ModelKind::calibrated) {
        if (train.empty())
            throw ValidationError("calibrated model needs a training campaign");
        const auto amplitudes = estimate_a_uav(train, cfg.gs, cfg.propagation.tx_power_dbm);
        p.counters.calibration_skipped = amplitudes.skipped;
        const auto effective =
            estimate_effective_pattern(amplitudes.samples, cfg.propagation.gs_pattern, cfg.propagation.wavelength(),
                                       cfg.calibration_bin_deg, cfg.calibration_min_support);
        p.power.delta_gain = delta_gain(effective, cfg.propagation.uav_pattern);
    }

    std::vector<SfSample> train_sf;
    if (!train.empty())
        train_sf = extract_sf(train, p.power);

    const bool need_fit = needs_correlation(cfg.method) && !cfg.correlation;
    if ((need_fit || is_gpr(cfg.method) || cfg.method == Method::SK || cfg.method == Method::TG_SK) && train.empty())
        throw ValidationError("method " + to_string(cfg.method) + " needs a training campaign for fitting");

    if (cfg.correlation)
        p.corr = *cfg.correlation;
    else if (need_fit)
        p.corr = fit_correlation_model(empirical_correlation(train_sf, cfg.binning));
    if (!train_sf.empty())
        p.prior_mean = sample_mean(train_sf);

    if (is_tg(cfg.method)) {
        p.corr_u = p.corr;
        p.corr_u.sigma_z = 1.0;
        if (train_sf.size() >= NormalScore::kMinSamples) {
            std::vector<double> z;
            for (const auto& s : train_sf)
                z.push_back(s.z);
            const NormalScore ns(z);
            std::vector<SfSample> scores = train_sf;
            for (auto& s : scores)
                s.z = ns.forward(s.z);
            p.corr_u = fit_correlation_model(empirical_correlation(scores, cfg.binning));
        }
    }

    if (is_gpr(cfg.method)) {
        std::vector<SfSample> centered = train_sf;
        for (auto& s : centered)
            s.z -= p.prior_mean;
        p.hyper = estimate_hyperparameters(centered, p.corr);
    }

    const double w = cfg.elevation_bin_deg;
    p.n_bins = static_cast<std::size_t>(std::ceil(180.0 / w - 1e-9));
    p.deterministic.resize(test.size());
    p.elevation_bin.resize(test.size());
    const double wavelength = cfg.propagation.wavelength();
    for (std::size_t i = 0; i < test.size(); ++i) {
        const GeoPoint& loc = test.location(i);
        p.deterministic[i] = p.power.received_power_dbm(loc);
        const double theta = link_geometry(cfg.gs, loc, wavelength).theta_t;
        const auto b = static_cast<std::ptrdiff_t>(std::floor((theta + 90.0) / w));
        p.elevation_bin[i] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(p.n_bins) - 1));
    }
    return p;
}

void add(EvalCounters& into, const EvalCounters& c) {
    into.kriging_fallbacks += c.kriging_fallbacks;
    into.jittered_solves += c.jittered_solves;
    into.tg_variant_fallbacks += c.tg_variant_fallbacks;
    into.gpr_variance_clamps += c.gpr_variance_clamps;
    into.mc_iteration_caps += c.mc_iteration_caps;
    into.mc_degenerate_grids += c.mc_degenerate_grids;
    into.calibration_skipped += c.calibration_skipped;
}

std::vector<std::size_t> draw_inputs(std::uint64_t seed, std::size_t iteration, std::size_t n, std::size_t m) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(iteration & 0xffffffffu),
                      static_cast<std::uint32_t>(static_cast<std::uint64_t>(iteration) >> 32)};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t k = 0; k < m; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, n - 1);
        std::swap(idx[k], idx[pick(rng)]);
    }
    return idx; // first m are inputs, rest held out
}

IterationResult run_iteration(const EvalConfig& cfg, const Prepared& p, const CampaignAccess& test,
                              std::size_t iteration) {
    const std::size_t n = test.size();
    const std::size_t m = cfg.m_samples;
    const auto order = draw_inputs(cfg.seed, iteration, n, m);

    IterationResult r;
    r.bin_sse.assign(p.n_bins, 0.0);
    r.bin_count.assign(p.n_bins, 0);

    std::function<double(const GeoPoint&)> predict_sf = [](const GeoPoint&) { return 0.0; };
    std::optional<KrigingPredictor> kriging;
    std::optional<GprModel> gpr;
    std::optional<McPipeline> mc;

    if (cfg.method != Method::TRPL_only) {
        std::vector<SfSample> inputs;
        inputs.reserve(m);
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t i = order[k];
            inputs.push_back({test.location(i), test.input_rsrp(i) - p.deterministic[i], test.seq(i)});
        }
        switch (cfg.method) {
        case Method::OK:
        case Method::SK:
        case Method::TG_OK:
        case Method::TG_SK: {
            KrigingConfig kc;
            kc.radius_m = cfg.radius_m;
            kc.mean_z = p.prior_mean;
            kc.variant = cfg.method == Method::OK      ? KrigingVariant::OK
                         : cfg.method == Method::SK    ? KrigingVariant::SK
                         : cfg.method == Method::TG_OK ? KrigingVariant::TG_OK
                                                       : KrigingVariant::TG_SK;
            std::optional<CorrelationModel> model_u;
            if (is_tg(cfg.method))
                model_u = p.corr_u;
            kriging.emplace(std::move(inputs), p.corr, kc, model_u);
            predict_sf = [&](const GeoPoint& loc) {
                const auto pr = kriging->predict(loc);
                r.counters.kriging_fallbacks += pr.fallback ? 1 : 0;
                r.counters.jittered_solves += pr.jittered ? 1 : 0;
                r.counters.tg_variant_fallbacks += pr.variant_fallback ? 1 : 0;
                // The no-neighbor fallback falls back to the prior mean for SK.
                if (pr.fallback)
                    return (cfg.method == Method::SK || cfg.method == Method::TG_SK) ? p.prior_mean : 0.0;
                return pr.z_hat;
            };
            break;
        }
        case Method::GPR:
        case Method::MC_GPR: {
            for (auto& s : inputs)
                s.z -= p.prior_mean;
            gpr.emplace(std::move(inputs), p.corr, p.hyper.sigma_y, p.hyper.sigma_gp);
            if (cfg.method == Method::MC_GPR) {
                try {
                    mc.emplace(*gpr, cfg.mc);
                } catch (const DegenerateExtent&) {
                    ++r.counters.mc_degenerate_grids;
                }
            }
            if (!mc) {
                predict_sf = [&](const GeoPoint& loc) {
                    const auto pr = gpr->predict(loc);
                    r.counters.gpr_variance_clamps += pr.clamped ? 1 : 0;
                    return pr.z_hat + p.prior_mean;
                };
            } else {
                r.counters.mc_iteration_caps += mc->completion().hit_iteration_cap ? 1 : 0;
                predict_sf = [&](const GeoPoint& loc) { return mc->predict(loc) + p.prior_mean; };
            }
            break;
        }
        case Method::TRPL_only:
            break;
        }
    }

    double sse = 0.0;
    for (std::size_t k = m; k < n; ++k) {
        const std::size_t i = order[k];
        const double err = p.deterministic[i] + predict_sf(test.location(i)) - test.scoring_rsrp(i);
        sse += err * err;
        r.bin_sse[p.elevation_bin[i]] += err * err;
        ++r.bin_count[p.elevation_bin[i]];
    }
    r.rmse = std::sqrt(sse / static_cast<double>(n - m));
    return r;
}

} // namespace

std::string to_string(Method m) {
    switch (m) {
    case Method::TRPL_only:
        return "TRPL_only";
    case Method::OK:
        return "OK";
    case Method::SK:
        return "SK";
    case Method::TG_OK:
        return "TG_OK";
    case Method::TG_SK:
        return "TG_SK";
    case Method::GPR:
        return "GPR";
    case Method::MC_GPR:
        return "MC_GPR";
    }
    return "GPR";
}

Method method_from_string(const std::string& name) {
    for (Method m : kMethods)
        if (to_string(m) == name)
            return m;
    throw ValidationError("unknown method '" + name + "'");
}

std::string to_string(ModelKind k) { return k == ModelKind::baseline ? "baseline" : "calibrated"; }

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "baseline")
        return ModelKind::baseline;
    if (name == "calibrated")
        return ModelKind::calibrated;
    throw ValidationError("unknown model kind '" + name + "'");
}

std::string to_string(SweepAxis a) {
    switch (a) {
    case SweepAxis::M:
        return "M";
    case SweepAxis::R:
        return "R";
    case SweepAxis::method:
        return "method";
    case SweepAxis::altitude_campaign:
        return "altitude_campaign";
    }
    return "M";
}

SweepAxis sweep_axis_from_string(const std::string& name) {
    for (auto a : {SweepAxis::M, SweepAxis::R, SweepAxis::method, SweepAxis::altitude_campaign})
        if (to_string(a) == name)
            return a;
    throw ValidationError("unknown sweep axis '" + name + "'");
}

void EvalConfig::validate(std::size_t test_size) const {
    if (m_samples < 1)
        throw ValidationError("m_samples must be at least 1");
    if (m_samples >= test_size)
        throw ValidationError("m_samples must be smaller than the test campaign (" + std::to_string(test_size) +
                              " points)");
    if (iterations < 1)
        throw ValidationError("iterations must be at least 1");
    if (!(radius_m > 0.0) || !std::isfinite(radius_m))
        throw ValidationError("radius_m must be positive");
    if (!(elevation_bin_deg > 0.0) || elevation_bin_deg > 180.0)
        throw ValidationError("elevation_bin_deg must be in (0, 180]");
    remkit::validate(gs);
    propagation.validate();
    mc.validate();
    if (correlation)
        correlation->validate();
}

double median(std::vector<double> values) {
    if (values.empty())
        throw InsufficientData("median of an empty list");
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (values.size() % 2 == 1)
        return *mid;
    return 0.5 * (*mid + *std::max_element(values.begin(), mid));
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

EvaluationReport monte_carlo_eval(const EvalConfig& cfg, std::span<const Measurement> train,
                                  const CampaignAccess& test_in) {
    cfg.validate(test_in.size());
    const std::vector<Measurement> train_rows = canonical_rows(train);
    const CanonicalCampaign test(test_in);
    const Prepared p = prepare(cfg, train_rows, test);

    std::vector<IterationResult> results(cfg.iterations);
    parallel_for(cfg.iterations, cfg.threads, [&](std::size_t it) { results[it] = run_iteration(cfg, p, test, it); });

    EvaluationReport rep;
    rep.config = cfg;
    rep.correlation_used = p.corr;
    rep.gpr_hyperparameters = p.hyper;
    rep.sf_prior_mean_db = p.prior_mean;
    rep.separation = p.separation;
    rep.n_train = train.size();
    rep.n_test = test.size();
    rep.counters = p.counters;
    std::vector<double> bin_sse(p.n_bins, 0.0);
    std::vector<std::size_t> bin_count(p.n_bins, 0);
    rep.rmse_db.reserve(results.size());
    for (const auto& r : results) {
        rep.rmse_db.push_back(r.rmse);
        add(rep.counters, r.counters);
        for (std::size_t b = 0; b < p.n_bins; ++b) {
            bin_sse[b] += r.bin_sse[b];
            bin_count[b] += r.bin_count[b];
        }
    }
    rep.median_rmse_db = median(rep.rmse_db);
    for (std::size_t b = 0; b < p.n_bins; ++b) {
        if (bin_count[b] == 0)
            continue;
        const double lo = -90.0 + static_cast<double>(b) * cfg.elevation_bin_deg;
        rep.per_elevation.push_back({lo, std::min(90.0, lo + cfg.elevation_bin_deg),
                                     std::sqrt(bin_sse[b] / static_cast<double>(bin_count[b])), bin_count[b]});
    }
    return rep;
}

EvaluationReport monte_carlo_eval(const EvalConfig& cfg, std::span<const Measurement> train,
                                  std::span<const Measurement> test) {
    return monte_carlo_eval(cfg, train, MeasurementCampaign(test));
}

std::vector<EvaluationReport> sweep(const EvalConfig& base, SweepAxis axis, std::span<const std::string> values,
                                    std::span<const Measurement> train,
                                    std::span<const CampaignAccess* const> tests) {
    if (values.empty())
        throw ValidationError("sweep needs at least one value");
    if (tests.empty())
        throw ValidationError("sweep needs a test campaign");
    std::vector<EvaluationReport> out;
    for (std::size_t k = 0; k < values.size(); ++k) {
        EvalConfig cfg = base;
        cfg.seed = base.seed + k;
        const CampaignAccess* test = tests.front();
        const std::string& v = values[k];
        try {
            switch (axis) {
            case SweepAxis::M:
                cfg.m_samples = std::stoul(v);
                break;
            case SweepAxis::R:
                cfg.radius_m = std::stod(v);
                break;
            case SweepAxis::method:
                cfg.method = method_from_string(v);
                break;
            case SweepAxis::altitude_campaign: {
                const std::size_t idx = std::stoul(v);
                if (idx >= tests.size())
                    throw ValidationError("campaign index " + v + " out of range");
                test = tests[idx];
                break;
            }
            }
        } catch (const std::logic_error&) {
            throw ValidationError("invalid sweep value '" + v + "' for axis " + to_string(axis));
        }
        out.push_back(monte_carlo_eval(cfg, train, *test));
    }
    return out;
}

void write_sweep_csv(std::ostream& out, SweepAxis axis, std::span<const std::string> values,
                     std::span<const EvaluationReport> reports) {
    if (values.size() != reports.size())
        throw ValidationError("sweep values and reports differ in length");
    out << "axis,value,method,model,m_samples,radius_m,seed,median_rmse_db,iteration,rmse_db\n";
    for (std::size_t k = 0; k < reports.size(); ++k) {
        const auto& r = reports[k];
        for (std::size_t it = 0; it < r.rmse_db.size(); ++it)
            out << to_string(axis) << ',' << values[k] << ',' << to_string(r.config.method) << ','
                << to_string(r.config.model) << ',' << r.config.m_samples << ',' << format_number(r.config.radius_m)
                << ',' << r.config.seed << ',' << format_number(r.median_rmse_db) << ',' << it << ','
                << format_number(r.rmse_db[it]) << '\n';
    }
}

} // namespace remkit
