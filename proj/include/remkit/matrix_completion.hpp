#pragma once

#include "remkit/gpr.hpp"

#include <Eigen/Dense>

#include <span>

namespace remkit {

/// Regular lat/lon-aligned grid on the local tangent plane. Rows follow
/// latitude (north), columns follow longitude (east); node (0, 0) sits at
/// `origin`, the south-west corner of the sample bounding box.
struct GridSpec {
    GeoPoint origin;
    double spacing_m = 5.0;
    Eigen::Index n_rows = 0;
    Eigen::Index n_cols = 0;

    GeoPoint node(Eigen::Index row, Eigen::Index col) const;
    /// Fractional (row, col) grid coordinates of a point; not clamped.
    std::pair<double, double> grid_coordinates(const GeoPoint& p) const;
};

struct ShadowGrid {
    GridSpec spec;
    Eigen::MatrixXd z;     ///< GPR means
    Eigen::MatrixXd sigma; ///< GPR predictive standard deviations
};

struct McConfig {
    double alpha = 1.0;
    double t_v = 1.0;       ///< dB threshold for deep-shadow cells
    double t_lambda = 20.0; ///< bisection gap on the nuclear-norm budget
    int dilation_radius = 1;
    int max_bisection_iters = 60;
    double spacing_m = 5.0;

    void validate() const;
};

/// Grid covering the horizontal bounding box of the samples with inclusive
/// endpoints. Throws DegenerateExtent when either axis spans less than one cell.
GridSpec build_grid(std::span<const SfSample> samples, double spacing_m);

ShadowGrid gpr_to_grid(const GprModel& model, const GridSpec& spec);

double nuclear_norm(const Eigen::MatrixXd& m);

/// Soft-thresholds the singular values so the nuclear norm becomes
/// min(lambda, ||m||_*). Returns m unchanged when lambda >= ||m||_*.
Eigen::MatrixXd nuclear_norm_project(const Eigen::MatrixXd& m, double lambda);

struct NuclearNormResult {
    Eigen::MatrixXd z;
    double lambda = 0.0; ///< nuclear-norm budget of the returned iterate
    int iterations = 0;
    bool hit_iteration_cap = false;
};

/// Bisection on the nuclear-norm budget subject to |out - z| <= alpha sigma
/// elementwise. Always returns the last feasible iterate.
NuclearNormResult nuclear_norm_min(const Eigen::MatrixXd& z, const Eigen::MatrixXd& sigma, const McConfig& cfg);
NuclearNormResult nuclear_norm_min(const ShadowGrid& grid, const McConfig& cfg);

struct DeepShadowSplit {
    Eigen::MatrixXd smooth;
    Eigen::MatrixXd deep;
};

/// deep = (z - z_mc) where |z - z_mc| > t_v, zero elsewhere; smooth = z - deep.
DeepShadowSplit decompose_deep_shadow(const Eigen::MatrixXd& z, const Eigen::MatrixXd& z_mc, double t_v);

/// Signed grayscale dilation with a (2r+1)^2 square: positive and negative
/// parts are max-filtered separately; where both reach a cell the larger
/// magnitude wins, ties going to the negative (shadow) side.
Eigen::MatrixXd dilate_deep_shadow(const Eigen::MatrixXd& z_ds, int radius);

/// Tensor-product natural cubic spline through a matrix of node values.
class BicubicSpline {
public:
    BicubicSpline() = default;
    explicit BicubicSpline(Eigen::MatrixXd values);

    /// Evaluates at fractional (row, col); coordinates are clamped to the grid.
    double operator()(double row, double col) const;

private:
    Eigen::MatrixXd values_;
    Eigen::MatrixXd row_curvature_; ///< second derivatives along columns, per row
};

/// The grid pipeline: GPR grid, nuclear-norm smoothing, deep-shadow split and
/// dilation, recombination. Computed once; predictions are spline lookups.
class McPipeline {
public:
    McPipeline(const GprModel& model, const McConfig& cfg);

    double predict(const GeoPoint& target) const;

    const ShadowGrid& grid() const { return grid_; }
    const NuclearNormResult& completion() const { return completion_; }
    const Eigen::MatrixXd& deep_shadow() const { return deep_; }
    const Eigen::MatrixXd& dilated_deep_shadow() const { return dilated_; }
    const Eigen::MatrixXd& smooth() const { return smooth_; }
    const Eigen::MatrixXd& recombined() const { return recombined_; }

private:
    McConfig cfg_;
    ShadowGrid grid_;
    NuclearNormResult completion_;
    Eigen::MatrixXd smooth_;
    Eigen::MatrixXd deep_;
    Eigen::MatrixXd dilated_;
    Eigen::MatrixXd recombined_;
    BicubicSpline spline_;
};

/// One-shot convenience over McPipeline.
double mc_assisted_predict(const GprModel& model, const McConfig& cfg, const GeoPoint& target);

} // namespace remkit
