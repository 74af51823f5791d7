#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <numeric>
#include <vector>

namespace remkit::detail {

struct SimplexResult {
    Eigen::VectorXd x;
    double f = 0.0;
    int evaluations = 0;
};

// Standard Nelder-Mead (reflection 1, expansion 2, contraction 0.5, shrink 0.5).
template <class F>
SimplexResult nelder_mead(F&& f, const Eigen::VectorXd& x0, double step, double ftol, int max_evals) {
    const Eigen::Index n = x0.size();
    std::vector<Eigen::VectorXd> pts(n + 1, x0);
    std::vector<double> vals(n + 1);
    int evals = 0;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++evals;
        return f(x);
    };
    for (Eigen::Index i = 0; i < n; ++i)
        pts[i + 1][i] += step;
    for (Eigen::Index i = 0; i <= n; ++i)
        vals[i] = eval(pts[i]);

    std::vector<Eigen::Index> order(n + 1);
    while (evals < max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto l, auto r) { return vals[l] < vals[r]; });
        const auto best = order.front();
        const auto worst = order.back();
        const auto second = order[n - 1];
        if (std::abs(vals[worst] - vals[best]) <= ftol * (std::abs(vals[best]) + 1e-300) + 1e-300)
            break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i <= n; ++i)
            if (i != worst)
                centroid += pts[i];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
        const double fr = eval(xr);
        if (fr < vals[best]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
            const double fe = eval(xe);
            if (fe < fr) {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        const bool outside = fr < vals[worst];
        const Eigen::VectorXd xc =
            outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid)) : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
        const double fc = eval(xc);
        if (fc < (outside ? fr : vals[worst])) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        for (Eigen::Index i = 0; i <= n; ++i) {
            if (i == best)
                continue;
            pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
            vals[i] = eval(pts[i]);
        }
    }
    const auto it = std::min_element(vals.begin(), vals.end());
    const auto ib = it - vals.begin();
    return {pts[ib], *it, evals};
}

} // namespace remkit::detail
