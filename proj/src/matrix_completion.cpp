#include "remkit/matrix_completion.hpp"

#include "remkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace remkit {

namespace {

// Second derivatives of the natural cubic spline through unit-spaced values.
Eigen::VectorXd natural_curvature(const Eigen::Ref<const Eigen::VectorXd>& y) {
    const Eigen::Index n = y.size();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
    if (n < 3)
        return m;
    // Thomas algorithm on M[i-1] + 4 M[i] + M[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1]).
    const Eigen::Index k = n - 2;
    Eigen::VectorXd c(k), d(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double rhs = 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]);
        if (i == 0) {
            c[i] = 1.0 / 4.0;
            d[i] = rhs / 4.0;
        } else {
            const double denom = 4.0 - c[i - 1];
            c[i] = 1.0 / denom;
            d[i] = (rhs - d[i - 1]) / denom;
        }
    }
    m[k] = d[k - 1];
    for (Eigen::Index i = k - 2; i >= 0; --i)
        m[i + 1] = d[i] - c[i] * m[i + 2];
    return m;
}

double spline_eval(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& m, double x) {
    const Eigen::Index n = y.size();
    if (n == 1)
        return y[0];
    x = std::clamp(x, 0.0, static_cast<double>(n - 1));
    auto i = static_cast<Eigen::Index>(std::floor(x));
    i = std::min(i, n - 2);
    const double t = x - static_cast<double>(i);
    if (t == 0.0)
        return y[i];
    const double s = 1.0 - t;
    return s * y[i] + t * y[i + 1] + ((s * s * s - s) * m[i] + (t * t * t - t) * m[i + 1]) / 6.0;
}

} // namespace

GeoPoint GridSpec::node(Eigen::Index row, Eigen::Index col) const {
    return LocalFrame(origin).to_geo({static_cast<double>(col) * spacing_m, static_cast<double>(row) * spacing_m},
                                     origin.alt);
}

std::pair<double, double> GridSpec::grid_coordinates(const GeoPoint& p) const {
    const LocalXY xy = LocalFrame(origin).to_local(p);
    return {xy.north / spacing_m, xy.east / spacing_m};
}

void McConfig::validate() const {
    if (!(alpha > 0.0))
        throw ValidationError("alpha must be positive");
    if (!(t_v >= 0.0))
        throw ValidationError("t_v must be non-negative");
    if (!(t_lambda > 0.0))
        throw ValidationError("t_lambda must be positive");
    if (dilation_radius < 0)
        throw ValidationError("dilation radius must be non-negative");
    if (max_bisection_iters < 1)
        throw ValidationError("max_bisection_iters must be at least 1");
    if (!(spacing_m > 0.0))
        throw ValidationError("grid spacing must be positive");
}

GridSpec build_grid(std::span<const SfSample> samples, double spacing_m) {
    if (!(spacing_m > 0.0))
        throw ValidationError("grid spacing must be positive");
    if (samples.empty())
        throw DegenerateExtent("no samples to grid");
    double lat_min = std::numeric_limits<double>::infinity(), lat_max = -lat_min;
    double lon_min = lat_min, lon_max = -lat_min;
    double alt_sum = 0.0;
    for (const auto& s : samples) {
        lat_min = std::min(lat_min, s.location.lat);
        lat_max = std::max(lat_max, s.location.lat);
        lon_min = std::min(lon_min, s.location.lon);
        lon_max = std::max(lon_max, s.location.lon);
        alt_sum += s.location.alt;
    }
    GridSpec spec;
    spec.origin = {lat_min, lon_min, alt_sum / static_cast<double>(samples.size())};
    spec.spacing_m = spacing_m;
    const LocalXY extent = LocalFrame(spec.origin).to_local({lat_max, lon_max, spec.origin.alt});
    auto count = [&](double len) { return static_cast<Eigen::Index>(std::ceil(len / spacing_m - 1e-6)) + 1; };
    if (extent.north < spacing_m || extent.east < spacing_m)
        throw DegenerateExtent("sample extent spans less than one grid cell along an axis");
    spec.n_rows = count(extent.north);
    spec.n_cols = count(extent.east);
    return spec;
}

ShadowGrid gpr_to_grid(const GprModel& model, const GridSpec& spec) {
    ShadowGrid grid{spec, Eigen::MatrixXd(spec.n_rows, spec.n_cols), Eigen::MatrixXd(spec.n_rows, spec.n_cols)};
    for (Eigen::Index i = 0; i < spec.n_rows; ++i) {
        for (Eigen::Index j = 0; j < spec.n_cols; ++j) {
            const auto p = model.predict(spec.node(i, j));
            grid.z(i, j) = p.z_hat;
            grid.sigma(i, j) = std::sqrt(p.variance);
        }
    }
    return grid;
}

double nuclear_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0)
        return 0.0;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues().sum();
}

Eigen::MatrixXd nuclear_norm_project(const Eigen::MatrixXd& m, double lambda) {
    if (!(lambda >= 0.0))
        throw ValidationError("nuclear-norm budget must be non-negative");
    if (m.size() == 0)
        return m;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd s = svd.singularValues(); // descending
    if (lambda >= s.sum())
        return m;
    // Water-filling: largest k with s_k > t_k, t_k = (sum_{i<=k} s_i - lambda) / k.
    double prefix = 0.0;
    double t = 0.0;
    for (Eigen::Index k = 0; k < s.size(); ++k) {
        prefix += s[k];
        const double tk = (prefix - lambda) / static_cast<double>(k + 1);
        if (s[k] > tk)
            t = tk;
        else
            break;
    }
    t = std::max(t, 0.0);
    const Eigen::VectorXd shrunk = (s.array() - t).cwiseMax(0.0);
    return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
}

NuclearNormResult nuclear_norm_min(const Eigen::MatrixXd& z, const Eigen::MatrixXd& sigma, const McConfig& cfg) {
    cfg.validate();
    if (z.rows() != sigma.rows() || z.cols() != sigma.cols())
        throw ValidationError("value and sigma matrices differ in shape");
    if ((sigma.array() < 0.0).any())
        throw ValidationError("sigma must be non-negative");

    const Eigen::ArrayXXd slack = cfg.alpha * sigma.array();
    auto feasible = [&](const Eigen::MatrixXd& x) { return ((x - z).array().abs() <= slack).all(); };

    const double norm_z = nuclear_norm(z);
    NuclearNormResult best{z, norm_z, 0, false};
    if ((sigma.array() == 0.0).all())
        return best;

    double lo = 0.0;
    double hi = norm_z;
    double lambda = norm_z;
    double gap = std::numeric_limits<double>::infinity();
    bool current_feasible = true;
    int iter = 0;
    // Each step projects the original matrix: the budget is the only search
    // variable, so feasibility is re-tested against a fixed input.
    while ((!current_feasible || gap > cfg.t_lambda) && iter < cfg.max_bisection_iters) {
        const double previous = lambda;
        lambda = 0.5 * (lo + hi);
        Eigen::MatrixXd candidate = nuclear_norm_project(z, lambda);
        current_feasible = feasible(candidate);
        if (current_feasible) {
            hi = lambda;
            best.z = std::move(candidate);
            best.lambda = lambda;
        } else {
            lo = lambda;
        }
        gap = std::abs(lambda - previous);
        ++iter;
    }
    best.iterations = iter;
    best.hit_iteration_cap = (!current_feasible || gap > cfg.t_lambda);
    return best;
}

NuclearNormResult nuclear_norm_min(const ShadowGrid& grid, const McConfig& cfg) {
    return nuclear_norm_min(grid.z, grid.sigma, cfg);
}

DeepShadowSplit decompose_deep_shadow(const Eigen::MatrixXd& z, const Eigen::MatrixXd& z_mc, double t_v) {
    if (z.rows() != z_mc.rows() || z.cols() != z_mc.cols())
        throw ValidationError("decomposition inputs differ in shape");
    const Eigen::ArrayXXd delta = (z - z_mc).array();
    DeepShadowSplit out;
    out.deep = (delta.abs() > t_v).select(delta, 0.0).matrix();
    out.smooth = z - out.deep;
    return out;
}

Eigen::MatrixXd dilate_deep_shadow(const Eigen::MatrixXd& z_ds, int radius) {
    if (radius < 0)
        throw ValidationError("dilation radius must be non-negative");
    const Eigen::Index rows = z_ds.rows();
    const Eigen::Index cols = z_ds.cols();
    const Eigen::MatrixXd pos = z_ds.cwiseMax(0.0);
    const Eigen::MatrixXd neg = (-z_ds).cwiseMax(0.0);
    auto max_filter = [&](const Eigen::MatrixXd& m) {
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) {
                const Eigen::Index r0 = std::max<Eigen::Index>(0, i - radius);
                const Eigen::Index r1 = std::min<Eigen::Index>(rows - 1, i + radius);
                const Eigen::Index c0 = std::max<Eigen::Index>(0, j - radius);
                const Eigen::Index c1 = std::min<Eigen::Index>(cols - 1, j + radius);
                out(i, j) = m.block(r0, c0, r1 - r0 + 1, c1 - c0 + 1).maxCoeff();
            }
        return out;
    };
    const Eigen::MatrixXd pd = max_filter(pos);
    const Eigen::MatrixXd nd = max_filter(neg);
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double p = pd(i, j);
            const double n = nd(i, j);
            if (p > 0.0 && n > 0.0)
                out(i, j) = p > n ? p : -n;
            else
                out(i, j) = p - n;
        }
    return out;
}

BicubicSpline::BicubicSpline(Eigen::MatrixXd values) : values_(std::move(values)) {
    row_curvature_.resize(values_.rows(), values_.cols());
    for (Eigen::Index i = 0; i < values_.rows(); ++i)
        row_curvature_.row(i) = natural_curvature(values_.row(i).transpose()).transpose();
}

double BicubicSpline::operator()(double row, double col) const {
    const Eigen::Index n_rows = values_.rows();
    Eigen::VectorXd column(n_rows);
    for (Eigen::Index i = 0; i < n_rows; ++i)
        column[i] = spline_eval(values_.row(i).transpose(), row_curvature_.row(i).transpose(), col);
    return spline_eval(column, natural_curvature(column), row);
}

McPipeline::McPipeline(const GprModel& model, const McConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    grid_ = gpr_to_grid(model, build_grid(model.samples(), cfg_.spacing_m));
    completion_ = nuclear_norm_min(grid_, cfg_);
    auto split = decompose_deep_shadow(grid_.z, completion_.z, cfg_.t_v);
    smooth_ = std::move(split.smooth);
    deep_ = std::move(split.deep);
    dilated_ = dilate_deep_shadow(deep_, cfg_.dilation_radius);
    recombined_ = smooth_ + dilated_;
    spline_ = BicubicSpline(recombined_);
}

double McPipeline::predict(const GeoPoint& target) const {
    const auto [row, col] = grid_.spec.grid_coordinates(target);
    return spline_(row, col);
}

double mc_assisted_predict(const GprModel& model, const McConfig& cfg, const GeoPoint& target) {
    return McPipeline(model, cfg).predict(target);
}

} // namespace remkit
