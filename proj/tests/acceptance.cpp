// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include "oracles.hpp"
#include "support.hpp"

#include "remkit/calibration.hpp"
#include "remkit/csv_io.hpp"
#include "remkit/gpr.hpp"
#include "remkit/harness.hpp"
#include "remkit/kriging.hpp"
#include "remkit/matrix_completion.hpp"
#include "remkit/propagation.hpp"
#include "remkit/scene.hpp"
#include "remkit/shadow_stats.hpp"

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

using namespace remkit;
using testing_support::offset;

namespace {

// Tolerances and limits, pinned.
constexpr double kFsplTolDb = 1e-9;
constexpr double kWeightSumTol = 1e-9;
constexpr double kExactTol = 1e-9;
constexpr double kOracleRelTol = 1e-8;
constexpr double kGprSkTol = 1e-9;
constexpr double kProjectionRelTol = 1e-6;
constexpr double kFeasibilityTol = 1e-9;
constexpr double kDeltaTolDb = 0.5;
constexpr double kMcWinFraction = 0.8;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;
std::vector<std::string> only; // criteria named on the command line; empty runs all

void run(const char* id, const char* title, const std::function<Outcome()>& body) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end())
        return;
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, fmt::format("threw: {}", e.what())};
    }
    fmt::print("{} {} {}: {} ({:.1f} s)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail, seconds_since(t0));
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
}

double rel_err(double got, long double want) {
    return static_cast<double>(std::fabs(static_cast<long double>(got) - want) / std::max(1.0L, std::fabs(want)));
}

std::vector<SfSample> five_points(std::mt19937_64& rng) {
    return testing_support::random_samples(rng, 5, 150.0, 30.0, 90.0);
}

Outcome ac1() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    PropagationConfig cfg;
    cfg.forced_gamma = 0.0;
    std::uniform_real_distribution<double> carrier(0.7e9, 6e9);
    const GeoPoint gs = offset(0, 0, 10);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        cfg.carrier_hz = carrier(rng);
        const auto uav = testing_support::random_point(rng, 2000.0, 11.0, 150.0);
        const auto g = link_geometry(gs, uav, cfg.wavelength());
        const auto og = oracle::geometry(gs, uav);
        const long double lambda = oracle::kLight / static_cast<long double>(cfg.carrier_hz);
        const long double fspl = 20.0L * std::log10(4.0L * oracle::kPi * og.d_3d / lambda);
        worst = std::max(worst, static_cast<double>(std::fabs(trpl_path_loss_db(cfg, g) - fspl)));
    }
    const double t = seconds_since(t0);
    return {worst <= kFsplTolDb && t < 1.0, fmt::format("max |TRPL - FSPL| = {:.2e} dB over 1000 links", worst)};
}

Outcome ac2() {
    std::mt19937_64 rng(202);
    KrigingConfig kc;
    kc.radius_m = 1e6;
    KrigingConfig exact = kc;
    exact.jitter = 0.0;
    double worst_sum = 0.0, worst_exact = 0.0, worst_ok = 0.0, worst_sk = 0.0;
    for (int k = 0; k < 200; ++k) {
        const auto s = five_points(rng);
        const auto model = testing_support::random_model(rng);
        const auto target = testing_support::random_point(rng, 150.0, 30.0, 90.0);
        std::normal_distribution<double> mean_dist(0.0, 2.0);
        kc.mean_z = mean_dist(rng);

        const auto ok = ok_predict(s, model, target, kc);
        const auto sk = sk_predict(s, model, target, kc);
        worst_sum = std::max(worst_sum, std::fabs(std::accumulate(ok.weights.begin(), ok.weights.end(), 0.0) - 1.0));

        const auto o_ok = oracle::ordinary_kriging(s, model, target);
        const auto o_sk = oracle::simple_kriging(s, model, target, kc.mean_z);
        worst_ok = std::max({worst_ok, rel_err(ok.z_hat, o_ok.z_hat), rel_err(ok.mse, o_ok.mse)});
        worst_sk = std::max({worst_sk, rel_err(sk.z_hat, o_sk.z_hat), rel_err(sk.mse, o_sk.mse)});

        exact.mean_z = kc.mean_z;
        for (const auto& p : s) {
            worst_exact = std::max(worst_exact, std::fabs(ok_predict(s, model, p.location, exact).z_hat - p.z));
            worst_exact = std::max(worst_exact, std::fabs(sk_predict(s, model, p.location, exact).z_hat - p.z));
        }
    }
    const bool pass = worst_sum <= kWeightSumTol && worst_exact <= kExactTol && worst_ok <= kOracleRelTol &&
                      worst_sk <= kOracleRelTol;
    return {pass, fmt::format("weight sum err {:.1e}, exactness err {:.1e}, OK rel err {:.1e}, SK rel err {:.1e}",
                              worst_sum, worst_exact, worst_ok, worst_sk)};
}

Outcome ac3() {
    std::mt19937_64 rng(303);
    KrigingConfig kc;
    kc.radius_m = 1e6;
    kc.mean_z = 0.0;
    double worst_mean = 0.0, worst_var = 0.0;
    for (int k = 0; k < 200; ++k) {
        const auto s = five_points(rng);
        const auto model = testing_support::random_model(rng);
        const auto target = testing_support::random_point(rng, 150.0, 30.0, 90.0);
        const GprModel gp(s, model, model.sigma_z, 0.0);
        const auto g = gpr_predict(gp, target);
        const auto sk = sk_predict(s, model, target, kc);
        worst_mean = std::max(worst_mean, std::fabs(g.z_hat - sk.z_hat));
        worst_var = std::max(worst_var, std::fabs(g.variance - sk.mse));
    }
    return {worst_mean <= kGprSkTol && worst_var <= kGprSkTol,
            fmt::format("max |GPR - SK| mean {:.1e}, variance {:.1e}", worst_mean, worst_var)};
}

Outcome ac4() {
    const auto t0 = Clock::now();
    Eigen::MatrixXd d(2, 2);
    d << 3, 0, 0, 1;
    Eigen::MatrixXd want(2, 2);
    want << 2, 0, 0, 0;
    const double hand = (nuclear_norm_project(d, 2.0) - want).cwiseAbs().maxCoeff();

    std::mt19937_64 rng(404);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_norm = 0.0;
    for (int k = 0; k < 100; ++k) {
        Eigen::MatrixXd m(20, 30);
        for (Eigen::Index i = 0; i < m.size(); ++i)
            m(i) = g(rng);
        const double lambda = u(rng) * nuclear_norm(m);
        worst_norm = std::max(worst_norm, (nuclear_norm(nuclear_norm_project(m, lambda)) - lambda) / lambda);
    }

    McConfig cfg; // alpha = 1, t_v = 1, t_lambda = 20
    double worst_violation = -1e300;
    int instances = 0;
    for (int k = 0; k < 100; ++k) {
        // smooth low-rank part plus a few localized dips
        Eigen::VectorXd a(50), b(50);
        for (int i = 0; i < 50; ++i) {
            a(i) = std::sin(0.1 * i + u(rng));
            b(i) = std::cos(0.07 * i + u(rng));
        }
        Eigen::MatrixXd z = 3.0 * a * b.transpose();
        for (Eigen::Index i = 0; i < z.size(); ++i)
            z(i) += 0.5 * g(rng) - (u(rng) < 0.02 ? 8.0 : 0.0);
        Eigen::MatrixXd sigma(50, 50);
        for (Eigen::Index i = 0; i < sigma.size(); ++i)
            sigma(i) = 0.2 + 1.8 * u(rng);
        const auto r = nuclear_norm_min(z, sigma, cfg);
        worst_violation = std::max(worst_violation, ((r.z - z).cwiseAbs() - cfg.alpha * sigma).maxCoeff());
        ++instances;
    }
    const double t = seconds_since(t0);
    const bool pass = hand <= 1e-12 && worst_norm <= kProjectionRelTol && worst_violation <= kFeasibilityTol && t < 30.0;
    return {pass, fmt::format("diag(3,1) err {:.1e}; max relative norm excess {:.1e}; max |Zhat - Z| - sigma = {:.2e} "
                              "over {} 50x50 instances",
                              hand, worst_norm, worst_violation, instances)};
}

// Point set for the correlation round trip: half spread uniformly over a
// 3 km square, half in tight clusters so the short lags are populated.
std::vector<GeoPoint> round_trip_points(std::mt19937_64& rng) {
    constexpr int n = 4500;
    constexpr double half = 1500.0;
    constexpr int clusters = 90;
    constexpr double cluster_half = 40.0;
    constexpr std::array<double, 4> alts{40.0, 45.0, 50.0, 60.0};
    std::uniform_int_distribution<std::size_t> alt(0, alts.size() - 1);
    std::uniform_real_distribution<double> wide(-half, half), near(-cluster_half, cluster_half);
    std::vector<GeoPoint> pts;
    for (int i = 0; i < n / 2; ++i) {
        const double e = wide(rng);
        const double nn = wide(rng);
        pts.push_back(offset(e, nn, alts[alt(rng)]));
    }
    std::vector<std::pair<double, double>> centers;
    for (int k = 0; k < clusters; ++k) {
        const double e = wide(rng);
        centers.emplace_back(e, wide(rng));
    }
    for (int i = n / 2; i < n; ++i) {
        const auto [ce, cn] = centers[static_cast<std::size_t>(i) % centers.size()];
        const double e = ce + near(rng);
        const double nn = cn + near(rng);
        pts.push_back(offset(e, nn, alts[alt(rng)]));
    }
    return pts;
}

Outcome ac5() {
    const auto t0 = Clock::now();
    const CorrelationModel truth{0.7, 0.05, 0.005, 0.1, 3.0};
    CorrelationBinning binning;
    for (double e = 0.0; e < 40.0; e += 2.0)
        binning.dh_edges.push_back(e);
    for (double e = 40.0; e <= 800.0; e += 10.0)
        binning.dh_edges.push_back(e);
    binning.dv_edges = {0.0, 2.5, 7.5, 12.5, 17.5, 22.5};

    std::array<std::vector<double>, 5> est;
    for (int s = 0; s < 20; ++s) {
        std::mt19937_64 rng(500 + s);
        const auto pts = round_trip_points(rng);
        const auto field = sample_correlated_field(pts, truth, 5000 + s);
        std::vector<SfSample> sf;
        for (std::size_t i = 0; i < pts.size(); ++i)
            sf.push_back({pts[i], field[i], static_cast<std::int64_t>(i)});
        const auto fit = fit_correlation_model(empirical_correlation(sf, binning));
        const std::array<double, 5> values{fit.a, fit.p1, fit.p2, fit.q, estimate_sigma(sf)};
        for (std::size_t k = 0; k < values.size(); ++k)
            est[k].push_back(values[k]);
    }

    // Percentile bootstrap of the median over seeds. The rate estimates have a
    // heavy upper tail (fits that turn the short component into a nugget), so
    // the mean is not a usable location statistic.
    const std::array<double, 5> want{truth.a, truth.p1, truth.p2, truth.q, truth.sigma_z};
    const std::array<const char*, 5> names{"a", "p1", "p2", "q", "sigma_z"};
    std::mt19937_64 rng(55);
    bool all_inside = true;
    std::string detail;
    for (std::size_t k = 0; k < est.size(); ++k) {
        std::uniform_int_distribution<std::size_t> pick(0, est[k].size() - 1);
        std::vector<double> boot;
        for (int b = 0; b < 4000; ++b) {
            std::vector<double> resample;
            for (std::size_t i = 0; i < est[k].size(); ++i)
                resample.push_back(est[k][pick(rng)]);
            boot.push_back(median(resample));
        }
        std::sort(boot.begin(), boot.end());
        const double lo = boot[100];
        const double hi = boot[3899];
        const bool inside = lo <= want[k] && want[k] <= hi;
        all_inside = all_inside && inside;
        detail += fmt::format("{}={} in [{:.4g}, {:.4g}]{}; ", names[k], want[k], lo, hi, inside ? "" : " MISS");
    }
    const double t = seconds_since(t0);
    return {all_inside && t < 120.0, detail + "20 seeds"};
}

struct Flights {
    SceneSpec scene;
    std::vector<Measurement> train;
    std::vector<Measurement> test;
};

Outcome ac6() {
    const auto t0 = Clock::now();
    Flights f;
    f.scene.gs = offset(0, 0, 10);
    f.scene.corr = {0.7, 0.05, 0.005, 0.02, 3.0};
    f.scene.noise_sd = 0.5;
    f.scene.seed = 8;
    const std::vector<Trajectory> flights{Trajectory::lawnmower(offset(0, 250, 0), 400, 300, 30, 40, 8),
                                          Trajectory::lawnmower(offset(0, 250, 0), 400, 300, 20, 70, 4.5)};
    const auto cs = generate_campaigns(f.scene, flights);
    f.train = cs[0].measurements;
    f.test = cs[1].measurements;

    EvalConfig cfg;
    cfg.gs = f.scene.gs;
    cfg.propagation = f.scene.cfg;
    cfg.m_samples = 100;
    cfg.radius_m = 200;
    cfg.iterations = 200;
    cfg.seed = 6;
    std::vector<std::pair<Method, double>> medians;
    for (Method m : {Method::TRPL_only, Method::OK, Method::SK, Method::GPR}) {
        cfg.method = m;
        medians.emplace_back(m, monte_carlo_eval(cfg, f.train, f.test).median_rmse_db);
    }
    const double trpl = medians[0].second;
    bool pass = true;
    std::string detail = fmt::format("n = {}; median RMSE", f.test.size());
    for (const auto& [m, v] : medians) {
        detail += fmt::format(" {} {:.3f}", to_string(m), v);
        if (m != Method::TRPL_only)
            pass = pass && v < trpl;
    }
    const double t = seconds_since(t0);
    return {pass && t < 300.0, detail + " dB"};
}

Outcome ac7() {
    const auto t0 = Clock::now();
    SceneSpec scene;
    scene.gs = offset(0, 0, 10);
    scene.corr = {0.7, 0.05, 0.005, 0.02, 3.0};
    scene.noise_sd = 0.5;
    scene.seed = 21;
    scene.blobs = {{offset(-100, 180, 0), 50.0, -10.0},
                   {offset(60, 260, 0), 50.0, -10.0},
                   {offset(120, 140, 0), 50.0, -10.0}};
    const auto lm = Trajectory::lawnmower(offset(0, 200, 0), 400, 240, 20, 40, 6);
    const std::vector<Trajectory> flights{lm, lm.at_altitude(70)};
    const auto cs = generate_campaigns(scene, flights);
    const auto& train = cs[0].measurements;
    const auto& test = cs[1].measurements;

    // fitted correlation, hyperparameters and prior mean, as the harness uses them
    EvalConfig cfg;
    cfg.method = Method::GPR;
    cfg.gs = scene.gs;
    cfg.propagation = scene.cfg;
    cfg.m_samples = 100;
    cfg.iterations = 1;
    const auto fitted = monte_carlo_eval(cfg, train, test);

    const auto sf = extract_sf(test, scene.cfg, scene.gs);
    std::vector<char> near_blob(sf.size(), 0);
    for (std::size_t i = 0; i < sf.size(); ++i)
        for (const auto& b : scene.blobs)
            if (horizontal_distance(sf[i].location, b.center) <= b.radius_m)
                near_blob[i] = 1;

    constexpr int iterations = 100;
    int wins = 0;
    std::vector<double> gpr_rmse, mc_rmse;
    for (int it = 0; it < iterations; ++it) {
        std::mt19937_64 rng(7000 + it);
        std::vector<std::size_t> order(sf.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<SfSample> inputs;
        for (std::size_t k = 0; k < cfg.m_samples; ++k) {
            auto s = sf[order[k]];
            s.z -= fitted.sf_prior_mean_db;
            inputs.push_back(s);
        }
        const GprModel gp(std::move(inputs), fitted.correlation_used, fitted.gpr_hyperparameters.sigma_y,
                          fitted.gpr_hyperparameters.sigma_gp);
        const McPipeline mc(gp, McConfig{});
        double sse_gp = 0.0, sse_mc = 0.0;
        std::size_t count = 0;
        for (std::size_t k = cfg.m_samples; k < sf.size(); ++k) {
            const std::size_t i = order[k];
            if (!near_blob[i])
                continue;
            const double truth = sf[i].z - fitted.sf_prior_mean_db;
            sse_gp += std::pow(gp.predict(sf[i].location).z_hat - truth, 2);
            sse_mc += std::pow(mc.predict(sf[i].location) - truth, 2);
            ++count;
        }
        gpr_rmse.push_back(std::sqrt(sse_gp / static_cast<double>(count)));
        mc_rmse.push_back(std::sqrt(sse_mc / static_cast<double>(count)));
        wins += mc_rmse.back() <= gpr_rmse.back() ? 1 : 0;
    }
    const double t = seconds_since(t0);
    const bool pass = wins >= static_cast<int>(kMcWinFraction * iterations) && t < 600.0;
    return {pass, fmt::format("MC-GPR <= GPR near blobs in {}/{} iterations (median {:.3f} vs {:.3f} dB)", wins,
                              iterations, median(mc_rmse), median(gpr_rmse))};
}

Outcome ac8() {
    const auto t0 = Clock::now();
    constexpr double bin_deg = 10.0;
    constexpr int min_support = 25;
    SceneSpec scene;
    scene.gs = offset(0, 0, 10);
    // Weak, short-range shadow fading: per-bin calibration error scales with sigma_z.
    scene.corr = {0.7, 0.1, 0.05, 0.02, 0.5};
    scene.noise_sd = 0.3;
    scene.seed = 5;
    scene.cfg.forced_gamma = 0.0;
    scene.cfg.uav_pattern = AntennaPattern::half_wave_dipole();
    const std::vector<SectorDistortion> sectors{{90.0, 150.0, -90.0, 90.0, -6.0}};
    scene.pattern_distortion = make_sector_distortion(bin_deg, sectors);

    const auto lm = Trajectory::lawnmower(offset(0, 0, 0), 500, 500, 16, 50, 8);
    const std::vector<Trajectory> parts{lm, lm.at_altitude(90)};
    const std::vector<Trajectory> flights{Trajectory::concat(parts),
                                          Trajectory::zigzag(offset(0, 0, 0), 400, 400, 8, 70, 8)};
    const auto cs = generate_campaigns(scene, flights);
    const auto& train = cs[0].measurements;
    const auto& test = cs[1].measurements;

    const auto delta = calibrate(train, scene.cfg, scene.gs, bin_deg, min_support);
    double worst = 0.0;
    int supported = 0, in_sector = 0;
    for (Eigen::Index i = 0; i < delta.delta_db.rows(); ++i)
        for (Eigen::Index j = 0; j < delta.delta_db.cols(); ++j) {
            if (!delta.supported(i, j))
                continue;
            const double injected = scene.pattern_distortion->at(delta.az_grid[static_cast<std::size_t>(i)],
                                                                 delta.el_grid[static_cast<std::size_t>(j)]);
            worst = std::max(worst, std::fabs(delta.delta_db(i, j) - injected));
            ++supported;
            in_sector += injected != 0.0 ? 1 : 0;
        }

    EvalConfig cfg;
    cfg.method = Method::OK;
    cfg.gs = scene.gs;
    cfg.propagation = scene.cfg;
    cfg.m_samples = 10;
    cfg.iterations = 200;
    cfg.seed = 8;
    cfg.calibration_bin_deg = bin_deg;
    cfg.calibration_min_support = min_support;
    const double baseline = monte_carlo_eval(cfg, train, test).median_rmse_db;
    cfg.model = ModelKind::calibrated;
    const double calibrated = monte_carlo_eval(cfg, train, test).median_rmse_db;
    const double t = seconds_since(t0);
    const bool pass = supported > 0 && in_sector > 0 && worst <= kDeltaTolDb && calibrated < baseline && t < 300.0;
    return {pass, fmt::format("{} supported bins ({} in the sector), max |dG - injected| = {:.3f} dB; OK median RMSE "
                              "at M=10: calibrated {:.3f} vs baseline {:.3f} dB",
                              supported, in_sector, worst, calibrated, baseline)};
}

Outcome ac9() {
    SceneSpec scene;
    scene.gs = offset(0, 0, 10);
    scene.corr = {0.7, 0.05, 0.005, 0.02, 3.0};
    scene.noise_sd = 0.5;
    scene.seed = 9;
    const std::vector<Trajectory> flights{Trajectory::lawnmower(offset(0, 200, 0), 280, 240, 20, 40, 8),
                                          Trajectory::lawnmower(offset(0, 200, 0), 240, 200, 20, 70, 8)};
    const auto cs = generate_campaigns(scene, flights);
    const auto& train = cs[0].measurements;
    const MeasurementCampaign test(cs[1].measurements);
    const CampaignAccess* tests[] = {&test};

    EvalConfig cfg;
    cfg.gs = scene.gs;
    cfg.propagation = scene.cfg;
    cfg.iterations = 5000;
    cfg.seed = 2024;

    // Each sweep runs serially, then twice on four workers.
    struct Case {
        Method method;
        SweepAxis axis;
        std::vector<std::string> values;
        std::size_t m;
    };
    const std::vector<Case> cases{{Method::OK, SweepAxis::R, {"70", "200"}, 10},
                                  {Method::GPR, SweepAxis::M, {"10", "250"}, 10}};
    bool pass = test.size() > 250;
    std::string detail = fmt::format("n = {}, 5000 iterations;", test.size());
    for (const auto& c : cases) {
        cfg.method = c.method;
        cfg.m_samples = c.m;
        cfg.threads = 1;
        const auto serial = sweep(cfg, c.axis, c.values, train, tests);
        cfg.threads = 4;
        const auto par_a = sweep(cfg, c.axis, c.values, train, tests);
        const auto par_b = sweep(cfg, c.axis, c.values, train, tests);
        for (std::size_t k = 0; k < c.values.size(); ++k) {
            const bool same = serial[k].rmse_db == par_a[k].rmse_db && par_a[k].rmse_db == par_b[k].rmse_db &&
                              serial[k].median_rmse_db == par_a[k].median_rmse_db;
            pass = pass && same;
            detail += fmt::format(" {} {}={}: {:.4f} dB{};", to_string(c.method), to_string(c.axis), c.values[k],
                                  serial[k].median_rmse_db, same ? "" : " MISMATCH");
        }
    }
    // a different seed gives a different draw
    cfg.method = Method::OK;
    cfg.m_samples = 10;
    cfg.iterations = 50;
    const auto a = monte_carlo_eval(cfg, train, test);
    cfg.seed += 1;
    const auto b = monte_carlo_eval(cfg, train, test);
    pass = pass && a.rmse_db != b.rmse_db;
    return {pass, detail + " bit-identical across 1 and 4 threads"};
}

Outcome ac10() {
    namespace fs = std::filesystem;
    SceneSpec scene;
    scene.gs = offset(0, 0, 10);
    scene.corr = {0.7, 0.05, 0.005, 0.02, 3.0};
    scene.noise_sd = 1.0;
    scene.seed = 10;
    // repeated passes over about 2000 locations per flight, as in a real campaign
    const auto lm = Trajectory::lawnmower(offset(0, 300, 0), 600, 400, 20, 40, 6);
    const std::size_t passes = (10000 + lm.waypoints.size() - 1) / lm.waypoints.size();
    const std::vector<Trajectory> both{Trajectory::concat(std::vector<Trajectory>(passes, lm)),
                                       Trajectory::concat(std::vector<Trajectory>(passes, lm.at_altitude(70)))};
    const auto cs = generate_campaigns(scene, both);

    const fs::path dir = fs::temp_directory_path() / fmt::format("remkit_ac10_{}", std::random_device{}());
    fs::create_directories(dir);
    write_measurements(dir / "train.csv", cs[0].measurements);
    write_measurements(dir / "test.csv", cs[1].measurements);
    {
        std::ofstream cfg(dir / "config.json");
        cfg << nlohmann::json{{"gs", {{"lat", scene.gs.lat}, {"lon", scene.gs.lon}, {"alt", scene.gs.alt}}}}.dump();
    }
    const std::string cmd =
        fmt::format("\"{}\" eval --config \"{}\" --train \"{}\" --test \"{}\" --method GPR -M 100 --iterations 100 "
                    "-o \"{}\" 2>\"{}\"",
                    REMKIT_CLI_PATH, (dir / "config.json").string(), (dir / "train.csv").string(),
                    (dir / "test.csv").string(), (dir / "report.json").string(), (dir / "stderr.txt").string());
    const auto t0 = Clock::now();
    const int status = std::system(cmd.c_str());
    const double t = seconds_since(t0);

    std::size_t reported = 0;
    double med = std::nan("");
    if (status == 0) {
        std::ifstream in(dir / "report.json");
        const auto j = nlohmann::json::parse(in);
        reported = j.at("rmse_db").size();
        med = j.at("median_rmse_db").get<double>();
    }
    fs::remove_all(dir);
    const bool pass = status == 0 && reported == 100 && cs[1].measurements.size() >= 10000 && t < 120.0;
    return {pass, fmt::format("{}-row test CSV, exit status {}, {} iterations reported, median {:.3f} dB, CLI wall "
                              "time {:.1f} s",
                              cs[1].measurements.size(), status, reported, med, t)};
}

} // namespace

int main(int argc, char** argv) {
    only.assign(argv + 1, argv + argc);
    run("AC1", "TRPL reduces to FSPL", ac1);
    run("AC2", "Kriging exactness and constraints", ac2);
    run("AC3", "GPR equals SK without nugget", ac3);
    run("AC4", "nuclear-norm machinery", ac4);
    run("AC5", "correlation model round trip", ac5);
    run("AC6", "reconstruction beats TRPL only", ac6);
    run("AC7", "MC-assisted GPR in deep shadow", ac7);
    run("AC8", "calibration round trip", ac8);
    run("AC9", "protocol determinism", ac9);
    run("AC10", "10k-row CLI evaluation", ac10);
    fmt::print("{} criteria failed\n", failures);
    return failures;
}
