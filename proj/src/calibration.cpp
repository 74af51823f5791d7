#include "remkit/calibration.hpp"

#include "remkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_set>

namespace remkit {

namespace {

double median_altitude(std::span<const Measurement> m) {
    std::vector<double> alt;
    alt.reserve(m.size());
    for (const auto& x : m)
        alt.push_back(x.location.alt);
    const auto mid = alt.begin() + static_cast<std::ptrdiff_t>(alt.size() / 2);
    std::nth_element(alt.begin(), mid, alt.end());
    if (alt.size() % 2 == 1)
        return *mid;
    const double upper = *mid;
    return 0.5 * (upper + *std::max_element(alt.begin(), mid));
}

} // namespace

AmplitudeEstimate estimate_a_uav(std::span<const Measurement> measurements, const GeoPoint& gs, double tx_power_dbm) {
    if (!std::isfinite(tx_power_dbm))
        throw ValidationError("tx power must be finite");
    AmplitudeEstimate out;
    out.samples.reserve(measurements.size());
    for (const auto& m : measurements) {
        LinkGeometry g;
        try {
            // Angles and distance do not depend on the wavelength.
            g = link_geometry(gs, m.location, 1.0);
        } catch (const DegenerateLink&) {
            ++out.skipped;
            continue;
        }
        AmplitudeSample s;
        s.phi_r = g.phi_r;
        s.theta_r = g.theta_r;
        s.phi_t = g.phi_t;
        s.theta_t = g.theta_t;
        s.d_3d = g.d_3d;
        s.amplitude = std::pow(10.0, (m.rsrp_dbm - tx_power_dbm) / 20.0);
        out.samples.push_back(s);
    }
    return out;
}

EffectivePattern estimate_effective_pattern(std::span<const AmplitudeSample> samples, const AntennaPattern& gs_pattern,
                                            double wavelength, double bin_deg, int min_support) {
    if (samples.empty())
        throw InsufficientData("no amplitude samples");
    if (!(wavelength > 0.0))
        throw ValidationError("wavelength must be positive");
    if (min_support < 1)
        throw ValidationError("min_support must be at least 1");
    const CalibratedDelta layout = CalibratedDelta::zeros(bin_deg);

    EffectivePattern out;
    out.bin_deg = bin_deg;
    out.min_support = min_support;
    out.az_grid = layout.az_grid;
    out.el_grid = layout.el_grid;
    const auto n_az = static_cast<Eigen::Index>(out.az_grid.size());
    const auto n_el = static_cast<Eigen::Index>(out.el_grid.size());
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n_az, n_el);
    out.support = Eigen::MatrixXi::Zero(n_az, n_el);

    const double k = 4.0 * std::numbers::pi / wavelength;
    for (const auto& s : samples) {
        const auto bin = layout.bin_of(s.phi_r, s.theta_r);
        if (!bin)
            continue;
        const double g_gs = std::pow(10.0, gain_at(gs_pattern, s.phi_t, s.theta_t) / 10.0);
        sum(bin->first, bin->second) += k * k * s.d_3d * s.d_3d * s.amplitude * s.amplitude / g_gs;
        ++out.support(bin->first, bin->second);
    }

    out.gain = Eigen::MatrixXd::Constant(n_az, n_el, std::numeric_limits<double>::quiet_NaN());
    bool any = false;
    for (Eigen::Index i = 0; i < n_az; ++i)
        for (Eigen::Index j = 0; j < n_el; ++j)
            if (out.supported(i, j) && sum(i, j) > 0.0) {
                out.gain(i, j) = 10.0 * std::log10(sum(i, j) / out.support(i, j));
                any = true;
            }
    if (!any)
        throw NoSupportedBins("no calibration bin reaches " + std::to_string(min_support) + " samples");
    return out;
}

AntennaPattern EffectivePattern::to_pattern(const AntennaPattern& fallback) const {
    AntennaPattern p;
    p.az_grid = az_grid;
    p.el_grid = el_grid;
    p.gain = gain;
    p.label = "effective";
    for (Eigen::Index i = 0; i < gain.rows(); ++i)
        for (Eigen::Index j = 0; j < gain.cols(); ++j)
            if (!std::isfinite(gain(i, j)))
                p.gain(i, j) = gain_at(fallback, az_grid[static_cast<std::size_t>(i)], el_grid[static_cast<std::size_t>(j)]);
    return p;
}

CalibratedDelta delta_gain(const EffectivePattern& effective, const AntennaPattern& baseline) {
    CalibratedDelta d = CalibratedDelta::zeros(effective.bin_deg);
    d.min_support = effective.min_support;
    d.support = effective.support;
    for (Eigen::Index i = 0; i < d.delta_db.rows(); ++i)
        for (Eigen::Index j = 0; j < d.delta_db.cols(); ++j) {
            const double g = effective.gain(i, j);
            if (!effective.supported(i, j) || !std::isfinite(g))
                continue;
            d.delta_db(i, j) = g - gain_at(baseline, d.az_grid[static_cast<std::size_t>(i)],
                                           d.el_grid[static_cast<std::size_t>(j)]);
        }
    return d;
}

CalibratedDelta calibrate(std::span<const Measurement> training, const PropagationConfig& cfg, const GeoPoint& gs,
                          double bin_deg, int min_support) {
    cfg.validate();
    const auto amplitudes = estimate_a_uav(training, gs, cfg.tx_power_dbm);
    const auto effective =
        estimate_effective_pattern(amplitudes.samples, cfg.gs_pattern, cfg.wavelength(), bin_deg, min_support);
    return delta_gain(effective, cfg.uav_pattern);
}

CampaignSeparation check_campaign_separation(std::span<const Measurement> train, std::span<const Measurement> test) {
    if (train.empty() || test.empty())
        throw ValidationError("campaigns must be non-empty");
    if (train.size() == test.size() &&
        std::equal(train.begin(), train.end(), test.begin(), [](const Measurement& a, const Measurement& b) {
            return a.location == b.location && a.rsrp_dbm == b.rsrp_dbm && a.seq == b.seq;
        }))
        throw ValidationError("training and test campaigns are identical");

    CampaignSeparation out;
    out.vertical_separation_m = std::abs(median_altitude(train) - median_altitude(test));

    constexpr double kNear = 5.0;
    const LocalFrame frame(train.front().location);
    auto key = [](std::int64_t x, std::int64_t y) { return (x << 32) ^ (y & 0xffffffff); };
    std::unordered_set<std::int64_t> cells;
    for (const auto& m : train) {
        const LocalXY xy = frame.to_local(m.location);
        cells.insert(key(static_cast<std::int64_t>(std::floor(xy.east / kNear)),
                         static_cast<std::int64_t>(std::floor(xy.north / kNear))));
    }
    std::size_t near = 0;
    for (const auto& m : test) {
        const LocalXY xy = frame.to_local(m.location);
        const auto cx = static_cast<std::int64_t>(std::floor(xy.east / kNear));
        const auto cy = static_cast<std::int64_t>(std::floor(xy.north / kNear));
        bool hit = false;
        for (std::int64_t dx = -1; dx <= 1 && !hit; ++dx)
            for (std::int64_t dy = -1; dy <= 1 && !hit; ++dy)
                hit = cells.contains(key(cx + dx, cy + dy));
        near += hit ? 1 : 0;
    }
    // Cell adjacency over-counts slightly (up to ~2 cells away); this is an
    // advisory figure.
    out.trajectory_overlap = static_cast<double>(near) / static_cast<double>(test.size());
    out.separated = out.vertical_separation_m >= 20.0 || out.trajectory_overlap <= 0.05;
    out.message = out.separated ? "campaigns separated"
                                : "campaigns overlap: vertical separation below 20 m and shared 2D trajectory";
    return out;
}

} // namespace remkit
