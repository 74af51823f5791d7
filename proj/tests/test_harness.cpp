#include "support.hpp"

#include "remkit/errors.hpp"
#include "remkit/harness.hpp"
#include "remkit/scene.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

using namespace remkit;
using testing_support::offset;

namespace {

struct Flights {
    SceneSpec scene;
    std::vector<Measurement> train;
    std::vector<Measurement> test;
};

Flights make_flights(double sigma_z = 3.0, double noise_sd = 0.5, std::uint64_t seed = 7, double p2 = 0.005) {
    Flights f;
    f.scene.gs = offset(0, 0, 10);
    f.scene.corr = {0.7, 0.05, p2, 0.02, sigma_z};
    f.scene.noise_sd = noise_sd;
    f.scene.seed = seed;
    const auto lm = Trajectory::lawnmower(offset(0, 200, 0), 240, 160, 20, 40, 8);
    const std::vector<Trajectory> flights{lm, lm.at_altitude(70)};
    const auto cs = generate_campaigns(f.scene, flights);
    f.train = cs[0].measurements;
    f.test = cs[1].measurements;
    return f;
}

EvalConfig base_config(const Flights& f, Method m) {
    EvalConfig c;
    c.method = m;
    c.gs = f.scene.gs;
    c.propagation = f.scene.cfg;
    c.m_samples = 60;
    c.radius_m = 200;
    c.iterations = 12;
    c.seed = 3;
    c.threads = 1;
    return c;
}

// Logs every RSRP read so the test can check what the evaluator touched.
class AuditedCampaign final : public CampaignAccess {
public:
    explicit AuditedCampaign(std::span<const Measurement> rows) : rows_(rows) {}

    std::size_t size() const override { return rows_.size(); }
    const GeoPoint& location(std::size_t i) const override { return rows_[i].location; }
    std::int64_t seq(std::size_t i) const override { return rows_[i].seq; }
    double input_rsrp(std::size_t i) const override {
        std::lock_guard lock(mu_);
        log_.push_back({true, rows_[i].seq});
        return rows_[i].rsrp_dbm;
    }
    double scoring_rsrp(std::size_t i) const override {
        std::lock_guard lock(mu_);
        log_.push_back({false, rows_[i].seq});
        return rows_[i].rsrp_dbm;
    }

    struct Read {
        bool input;
        std::int64_t seq;
    };
    const std::vector<Read>& log() const { return log_; }

private:
    std::span<const Measurement> rows_;
    mutable std::mutex mu_;
    mutable std::vector<Read> log_;
};

} // namespace

TEST(Harness, TestValuesOnlyReadAsInputsOrForScoring) {
    const auto f = make_flights();
    for (Method m : {Method::TRPL_only, Method::OK, Method::TG_SK, Method::GPR, Method::MC_GPR}) {
        auto cfg = base_config(f, m);
        cfg.iterations = 4;
        const AuditedCampaign audited(f.test);
        monte_carlo_eval(cfg, f.train, audited);
        const std::size_t n = f.test.size();
        const std::size_t inputs = m == Method::TRPL_only ? 0 : cfg.m_samples;
        const std::size_t per_iteration = inputs + (n - cfg.m_samples);
        ASSERT_EQ(audited.log().size(), cfg.iterations * per_iteration) << to_string(m);
        for (std::size_t it = 0; it < cfg.iterations; ++it) {
            std::set<std::int64_t> in, scored;
            for (std::size_t k = 0; k < per_iteration; ++k) {
                const auto& r = audited.log()[it * per_iteration + k];
                // inputs come first, then scoring, never mixed
                EXPECT_EQ(r.input, k < inputs) << to_string(m);
                (r.input ? in : scored).insert(r.seq);
            }
            EXPECT_EQ(scored.size(), n - cfg.m_samples);
            if (m != Method::TRPL_only) {
                EXPECT_EQ(in.size(), cfg.m_samples);
                for (auto s : in)
                    EXPECT_EQ(scored.count(s), 0u);
            }
        }
    }
}

TEST(Harness, DeterministicPerSeedAndParallelInvariant) {
    const auto f = make_flights();
    for (Method m : {Method::OK, Method::GPR, Method::MC_GPR}) {
        auto cfg = base_config(f, m);
        const auto a = monte_carlo_eval(cfg, f.train, f.test);
        const auto b = monte_carlo_eval(cfg, f.train, f.test);
        EXPECT_EQ(a.rmse_db, b.rmse_db);
        cfg.threads = 4;
        const auto c = monte_carlo_eval(cfg, f.train, f.test);
        EXPECT_EQ(a.rmse_db, c.rmse_db) << to_string(m);
        EXPECT_EQ(a.median_rmse_db, c.median_rmse_db);
        cfg.seed += 1;
        EXPECT_NE(monte_carlo_eval(cfg, f.train, f.test).rmse_db, a.rmse_db);
    }
}

TEST(Harness, ReportIsSelfConsistent) {
    const auto f = make_flights();
    const auto cfg = base_config(f, Method::SK);
    const auto r = monte_carlo_eval(cfg, f.train, f.test);
    ASSERT_EQ(r.rmse_db.size(), cfg.iterations);
    EXPECT_EQ(r.median_rmse_db, median(r.rmse_db));
    std::size_t scored = 0;
    for (const auto& b : r.per_elevation) {
        scored += b.count;
        EXPECT_NEAR(b.hi_deg - b.lo_deg, 10.0, 1e-12);
        EXPECT_EQ(std::fmod(b.lo_deg + 90.0, 10.0), 0.0);
    }
    EXPECT_EQ(scored, cfg.iterations * (f.test.size() - cfg.m_samples));
    EXPECT_EQ(r.n_test, f.test.size());
    EXPECT_EQ(r.n_train, f.train.size());
    ASSERT_TRUE(r.separation.has_value());
    EXPECT_TRUE(r.separation->separated);
}

TEST(Harness, TrplOnlyIsExactOnNoiseFreeTrplScene) {
    const auto f = make_flights(0.0, 0.0);
    const auto r = monte_carlo_eval(base_config(f, Method::TRPL_only), {}, f.test);
    EXPECT_EQ(r.median_rmse_db, 0.0);
}

TEST(Harness, DenseSimpleKrigingBeatsDeterministicModel) {
    const auto f = make_flights(3.0, 0.0);
    auto cfg = base_config(f, Method::SK);
    cfg.m_samples = f.test.size() - 1;
    const auto sk = monte_carlo_eval(cfg, f.train, f.test);
    cfg.method = Method::TRPL_only;
    const auto trpl = monte_carlo_eval(cfg, f.train, f.test);
    EXPECT_LT(sk.median_rmse_db, trpl.median_rmse_db);
}

TEST(Harness, RowOrderDoesNotMatter) {
    const auto f = make_flights();
    auto cfg = base_config(f, Method::OK);
    const auto a = monte_carlo_eval(cfg, f.train, f.test);
    auto train = f.train;
    auto test = f.test;
    std::mt19937_64 rng(5);
    std::shuffle(train.begin(), train.end(), rng);
    std::shuffle(test.begin(), test.end(), rng);
    const auto b = monte_carlo_eval(cfg, train, test);
    EXPECT_EQ(a.rmse_db, b.rmse_db);
}

TEST(Harness, ValidationErrors) {
    const auto f = make_flights();
    auto cfg = base_config(f, Method::OK);
    cfg.m_samples = f.test.size();
    EXPECT_THROW(monte_carlo_eval(cfg, f.train, f.test), ValidationError);
    cfg.m_samples = 0;
    EXPECT_THROW(monte_carlo_eval(cfg, f.train, f.test), ValidationError);
    cfg = base_config(f, Method::OK);
    EXPECT_THROW(monte_carlo_eval(cfg, f.test, f.test), ValidationError);
    cfg.method = Method::GPR;
    EXPECT_THROW(monte_carlo_eval(cfg, {}, f.test), ValidationError);
    EXPECT_THROW(method_from_string("BLUE"), ValidationError);
    EXPECT_THROW(model_kind_from_string("tuned"), ValidationError);
    for (Method m : {Method::TRPL_only, Method::OK, Method::SK, Method::TG_OK, Method::TG_SK, Method::GPR,
                     Method::MC_GPR})
        EXPECT_EQ(method_from_string(to_string(m)), m);
}

TEST(Harness, CalibratedModelRuns) {
    auto f = make_flights();
    auto cfg = base_config(f, Method::OK);
    cfg.model = ModelKind::calibrated;
    cfg.calibration_bin_deg = 10.0;
    cfg.calibration_min_support = 5;
    const auto r = monte_carlo_eval(cfg, f.train, f.test);
    EXPECT_TRUE(std::isfinite(r.median_rmse_db));
}

TEST(Sweep, SingleValueEqualsDirectEvaluation) {
    const auto f = make_flights();
    const auto cfg = base_config(f, Method::GPR);
    const MeasurementCampaign test(f.test);
    const CampaignAccess* tests[] = {&test};
    const std::vector<std::string> values{"60"};
    const auto reports = sweep(cfg, SweepAxis::M, values, f.train, tests);
    ASSERT_EQ(reports.size(), 1u);
    EXPECT_EQ(reports[0].rmse_db, monte_carlo_eval(cfg, f.train, f.test).rmse_db);

    std::ostringstream csv;
    write_sweep_csv(csv, SweepAxis::M, values, reports);
    const auto text = csv.str();
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), 1 + cfg.iterations);
    EXPECT_THROW(sweep(cfg, SweepAxis::M, std::vector<std::string>{"lots"}, f.train, tests), ValidationError);
    EXPECT_THROW(sweep(cfg, SweepAxis::altitude_campaign, std::vector<std::string>{"3"}, f.train, tests),
                 ValidationError);
}

TEST(Sweep, MoreSamplesDoNotHurt) {
    const auto f = make_flights();
    auto cfg = base_config(f, Method::GPR);
    cfg.iterations = 30;
    const MeasurementCampaign test(f.test);
    const CampaignAccess* tests[] = {&test};
    const auto r = sweep(cfg, SweepAxis::M, std::vector<std::string>{"50", "100", "200"}, f.train, tests);
    EXPECT_LE(r[1].median_rmse_db, r[0].median_rmse_db + 0.1);
    EXPECT_LE(r[2].median_rmse_db, r[1].median_rmse_db + 0.1);
}

TEST(Sweep, WiderRadiusHelpsOnLongCorrelation) {
    const auto f = make_flights(3.0, 0.5, 11, 0.003);
    auto cfg = base_config(f, Method::OK);
    cfg.m_samples = 50;
    cfg.iterations = 40;
    const MeasurementCampaign test(f.test);
    const CampaignAccess* tests[] = {&test};
    const auto r = sweep(cfg, SweepAxis::R, std::vector<std::string>{"70", "200"}, f.train, tests);
    EXPECT_LE(r[1].median_rmse_db, r[0].median_rmse_db);
}

TEST(Sweep, AltitudeCampaignAxisPicksCampaign) {
    const auto f = make_flights();
    const auto cfg = base_config(f, Method::TRPL_only);
    auto other = f.test;
    for (auto& m : other)
        m.rsrp_dbm += 1.0;
    const MeasurementCampaign a(f.test), b(other);
    const CampaignAccess* tests[] = {&a, &b};
    const auto r = sweep(cfg, SweepAxis::altitude_campaign, std::vector<std::string>{"0", "1"}, f.train, tests);
    EXPECT_NE(r[0].median_rmse_db, r[1].median_rmse_db);
}

TEST(Parallel, LowestFailingIndexWins) {
    std::vector<int> hits(50, 0);
    parallel_for(50, 4, [&](std::size_t i) { hits[i] += 1; });
    EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    try {
        parallel_for(50, 4, [](std::size_t i) {
            if (i == 7 || i == 30)
                throw std::runtime_error(std::to_string(i));
        });
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "7");
    }
}

TEST(Median, EvenAndOdd) {
    EXPECT_EQ(median({3, 1, 2}), 2.0);
    EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
    EXPECT_THROW(median({}), InsufficientData);
}
