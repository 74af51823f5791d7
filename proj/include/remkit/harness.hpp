#pragma once

#include "remkit/calibration.hpp"
#include "remkit/gpr.hpp"
#include "remkit/matrix_completion.hpp"
#include "remkit/shadow_stats.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace remkit {

enum class Method { TRPL_only, OK, SK, TG_OK, TG_SK, GPR, MC_GPR };
enum class ModelKind { baseline, calibrated };

std::string to_string(Method m);
Method method_from_string(const std::string& name);
std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& name);

struct EvalConfig {
    Method method = Method::GPR;
    ModelKind model = ModelKind::baseline;
    std::size_t m_samples = 100;
    double radius_m = 200.0;
    std::size_t iterations = 5000;
    std::uint64_t seed = 1;
    unsigned threads = 0; ///< 0: hardware concurrency

    GeoPoint gs;
    PropagationConfig propagation;
    /// Fixed shadow-fading model; fitted on the training campaign when absent.
    std::optional<CorrelationModel> correlation;
    CorrelationBinning binning = CorrelationBinning::defaults();
    McConfig mc;
    double calibration_bin_deg = 5.0;
    int calibration_min_support = 25;
    double elevation_bin_deg = 10.0;

    void validate(std::size_t test_size) const;
};

/// Read access to a measurement campaign. The evaluator asks for RSRP values
/// through two separate calls so tests can audit that held-out values are only
/// touched when scoring.
class CampaignAccess {
public:
    virtual ~CampaignAccess() = default;
    virtual std::size_t size() const = 0;
    virtual const GeoPoint& location(std::size_t i) const = 0;
    virtual std::int64_t seq(std::size_t i) const = 0;
    /// Value of a point drawn as a reconstruction input.
    virtual double input_rsrp(std::size_t i) const = 0;
    /// Value of a held-out point, read only to score a prediction.
    virtual double scoring_rsrp(std::size_t i) const = 0;
};

class MeasurementCampaign final : public CampaignAccess {
public:
    explicit MeasurementCampaign(std::span<const Measurement> rows) : rows_(rows) {}

    std::size_t size() const override { return rows_.size(); }
    const GeoPoint& location(std::size_t i) const override { return rows_[i].location; }
    std::int64_t seq(std::size_t i) const override { return rows_[i].seq; }
    double input_rsrp(std::size_t i) const override { return rows_[i].rsrp_dbm; }
    double scoring_rsrp(std::size_t i) const override { return rows_[i].rsrp_dbm; }

private:
    std::span<const Measurement> rows_;
};

struct ElevationBinRmse {
    double lo_deg = 0.0;
    double hi_deg = 0.0;
    double rmse_db = 0.0; ///< pooled over all iterations
    std::size_t count = 0;
};

struct EvalCounters {
    std::size_t kriging_fallbacks = 0;     ///< targets with no sample inside R
    std::size_t jittered_solves = 0;
    std::size_t tg_variant_fallbacks = 0;  ///< TG requested, transform unavailable
    std::size_t gpr_variance_clamps = 0;
    std::size_t mc_iteration_caps = 0;     ///< bisection stopped by the iteration cap
    std::size_t mc_degenerate_grids = 0;   ///< inputs spanned under one grid cell; plain GPR used
    std::size_t calibration_skipped = 0;   ///< degenerate links dropped while calibrating
};

struct EvaluationReport {
    EvalConfig config;
    std::vector<double> rmse_db; ///< per iteration, in iteration order
    double median_rmse_db = 0.0;
    std::vector<ElevationBinRmse> per_elevation;
    EvalCounters counters;
    CorrelationModel correlation_used;
    GprHyperparameters gpr_hyperparameters;
    double sf_prior_mean_db = 0.0; ///< training shadow-fading mean used as prior mean
    std::optional<CampaignSeparation> separation;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
};

double median(std::vector<double> values);

/// Monte-Carlo sparse-sampling evaluation. The training campaign is used only
/// for fitting (correlation, hyperparameters, calibration); each iteration
/// draws M test points without replacement as inputs and scores RSRP
/// predictions at the remaining points. Both campaigns are ordered by
/// (seq, lat, lon, alt) first, so file row order does not affect the result.
EvaluationReport monte_carlo_eval(const EvalConfig& cfg, std::span<const Measurement> train,
                                  const CampaignAccess& test);
EvaluationReport monte_carlo_eval(const EvalConfig& cfg, std::span<const Measurement> train,
                                  std::span<const Measurement> test);

enum class SweepAxis { M, R, method, altitude_campaign };

std::string to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& name);

/// One report per value; value k runs with seed base.seed + k. For the
/// altitude_campaign axis each value is an index into `tests`; other axes use
/// tests[0].
std::vector<EvaluationReport> sweep(const EvalConfig& base, SweepAxis axis, std::span<const std::string> values,
                                    std::span<const Measurement> train,
                                    std::span<const CampaignAccess* const> tests);

/// Long format: one row per (value, iteration).
void write_sweep_csv(std::ostream& out, SweepAxis axis, std::span<const std::string> values,
                     std::span<const EvaluationReport> reports);

/// Runs fn(0..n-1) on up to `threads` workers. Rethrows the exception of the
/// lowest failing index.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

} // namespace remkit
