#include "remkit/propagation.hpp"

#include "remkit/errors.hpp"

#include <algorithm>
#include <cmath>

namespace remkit {

namespace {

bool strictly_ascending(const std::vector<double>& v) {
    return std::adjacent_find(v.begin(), v.end(), [](double a, double b) { return !(a < b); }) == v.end();
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// Locates x within an ascending grid: index i and weight t such that
// x == (1 - t) * grid[i] + t * grid[i + 1]. x must lie inside the grid.
std::pair<std::size_t, double> bracket(const std::vector<double>& grid, double x) {
    if (grid.size() == 1)
        return {0, 0.0};
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    std::size_t i = it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
    i = std::min(i, grid.size() - 2);
    const double t = (x - grid[i]) / (grid[i + 1] - grid[i]);
    return {i, t};
}

double wrap360(double deg) {
    double a = std::fmod(deg, 360.0);
    if (a < 0.0)
        a += 360.0;
    return a >= 360.0 ? 0.0 : a;
}

} // namespace

AntennaPattern AntennaPattern::isotropic() {
    AntennaPattern p;
    p.az_grid = {0.0};
    p.el_grid = {-90.0, 90.0};
    p.gain = Eigen::MatrixXd::Zero(1, 2);
    p.label = "isotropic";
    return p;
}

AntennaPattern AntennaPattern::half_wave_dipole(double el_step_deg, double floor_dbi) {
    if (!(el_step_deg > 0.0))
        throw ValidationError("dipole elevation step must be positive");
    AntennaPattern p;
    p.az_grid = {0.0};
    const int n = static_cast<int>(std::round(180.0 / el_step_deg));
    for (int k = 0; k <= n; ++k)
        p.el_grid.push_back(-90.0 + 180.0 * k / n);
    p.gain.resize(1, static_cast<Eigen::Index>(p.el_grid.size()));
    // Directivity 1.64 (2.15 dBi) times the normalized half-wave field shape.
    for (std::size_t k = 0; k < p.el_grid.size(); ++k) {
        const double th = deg2rad(p.el_grid[k]);
        const double c = std::cos(th);
        double g = 0.0;
        if (std::abs(c) > 1e-12) {
            const double f = std::cos(0.5 * std::numbers::pi * std::sin(th)) / c;
            g = 1.64 * f * f;
        }
        p.gain(0, static_cast<Eigen::Index>(k)) = g > 0.0 ? std::max(10.0 * std::log10(g), floor_dbi) : floor_dbi;
    }
    p.label = "half_wave_dipole";
    return p;
}

void AntennaPattern::validate() const {
    if (az_grid.empty() || el_grid.empty())
        throw ValidationError("antenna pattern '" + label + "' has an empty grid");
    if (!strictly_ascending(az_grid) || !strictly_ascending(el_grid))
        throw ValidationError("antenna pattern '" + label + "' grids must be strictly ascending");
    if (az_grid.back() - az_grid.front() >= 360.0)
        throw ValidationError("antenna pattern '" + label + "' azimuth grid spans 360 degrees or more");
    if (el_grid.front() < -90.0 || el_grid.back() > 90.0)
        throw ValidationError("antenna pattern '" + label + "' elevation grid outside [-90, 90]");
    if (gain.rows() != static_cast<Eigen::Index>(az_grid.size()) ||
        gain.cols() != static_cast<Eigen::Index>(el_grid.size()))
        throw ValidationError("antenna pattern '" + label + "' gain matrix does not match its grids");
    if (!gain.allFinite())
        throw ValidationError("antenna pattern '" + label + "' contains non-finite gain");
}

double gain_at(const AntennaPattern& p, double az_deg, double el_deg) {
    const double el = std::clamp(el_deg, p.el_grid.front(), p.el_grid.back());
    const auto [j, te] = bracket(p.el_grid, el);
    const auto along_el = [&](std::size_t i) {
        const auto r = static_cast<Eigen::Index>(i);
        const auto c = static_cast<Eigen::Index>(j);
        if (p.el_grid.size() == 1)
            return p.gain(r, 0);
        return (1.0 - te) * p.gain(r, c) + te * p.gain(r, c + 1);
    };

    const std::size_t n_az = p.az_grid.size();
    if (n_az == 1)
        return along_el(0);

    const double az0 = p.az_grid.front();
    const double a = az0 + wrap360(az_deg - az0);
    if (a >= p.az_grid.back()) {
        // Wrap interval between the last node and the first node + 360.
        const double span = az0 + 360.0 - p.az_grid.back();
        const double t = (a - p.az_grid.back()) / span;
        return (1.0 - t) * along_el(n_az - 1) + t * along_el(0);
    }
    const auto [i, ta] = bracket(p.az_grid, a);
    return (1.0 - ta) * along_el(i) + ta * along_el(i + 1);
}

CalibratedDelta CalibratedDelta::zeros(double bin_deg) {
    if (!(bin_deg > 0.0))
        throw ValidationError("bin width must be positive");
    CalibratedDelta d;
    d.bin_deg = bin_deg;
    const auto n_az = static_cast<int>(std::ceil(360.0 / bin_deg - 1e-9));
    const auto n_el = static_cast<int>(std::ceil(180.0 / bin_deg - 1e-9));
    for (int k = 0; k < n_az; ++k)
        d.az_grid.push_back((k + 0.5) * bin_deg);
    for (int k = 0; k < n_el; ++k)
        d.el_grid.push_back(-90.0 + (k + 0.5) * bin_deg);
    d.delta_db = Eigen::MatrixXd::Zero(n_az, n_el);
    d.support = Eigen::MatrixXi::Constant(n_az, n_el, d.min_support);
    return d;
}

std::optional<std::pair<Eigen::Index, Eigen::Index>> CalibratedDelta::bin_of(double az_deg, double el_deg) const {
    if (az_grid.empty() || el_grid.empty() || !std::isfinite(az_deg) || !std::isfinite(el_deg))
        return std::nullopt;
    const double el_lo = el_grid.front() - 0.5 * bin_deg;
    const double el_hi = el_grid.back() + 0.5 * bin_deg;
    if (el_deg < el_lo || el_deg > el_hi)
        return std::nullopt;
    const auto n_az = static_cast<Eigen::Index>(az_grid.size());
    const auto n_el = static_cast<Eigen::Index>(el_grid.size());
    const double az_lo = az_grid.front() - 0.5 * bin_deg;
    auto ai = static_cast<Eigen::Index>(std::floor(wrap360(az_deg - az_lo) / bin_deg));
    auto ei = static_cast<Eigen::Index>(std::floor((el_deg - el_lo) / bin_deg));
    if (ai >= n_az)
        return std::nullopt;
    ei = std::min(ei, n_el - 1);
    return std::make_pair(ai, ei);
}

double CalibratedDelta::at(double az_deg, double el_deg) const {
    const auto bin = bin_of(az_deg, el_deg);
    if (!bin || !supported(bin->first, bin->second))
        return 0.0;
    return delta_db(bin->first, bin->second);
}

void PropagationConfig::validate() const {
    if (!(carrier_hz > 0.0))
        throw ValidationError("carrier_hz must be positive");
    if (!(ground_rel_permittivity >= 1.0))
        throw ValidationError("ground relative permittivity must be >= 1");
    if (!std::isfinite(tx_power_dbm))
        throw ValidationError("tx power must be finite");
    gs_pattern.validate();
    uav_pattern.validate();
}

std::complex<double> reflection_coefficient(double theta_ref_deg, double eps_r, Polarization pol) {
    const double psi = deg2rad(theta_ref_deg);
    const double s = std::sin(psi);
    const double c = std::cos(psi);
    const double root = std::sqrt(std::max(eps_r - c * c, 0.0));
    const double num = pol == Polarization::vertical ? eps_r * s - root : s - root;
    const double den = pol == Polarization::vertical ? eps_r * s + root : s + root;
    if (den == 0.0)
        return {-1.0, 0.0};
    return {num / den, 0.0};
}

double free_space_path_loss_db(double d_3d, double wavelength) {
    return 20.0 * std::log10(4.0 * std::numbers::pi * d_3d / wavelength);
}

double trpl_attenuation(const PropagationConfig& cfg, const LinkGeometry& geom, const CalibratedDelta* uav_distortion) {
    if (!(geom.d_3d > 0.0))
        throw DegenerateLink("link geometry has zero length");
    const double lambda = cfg.wavelength();

    auto uav_gain_db = [&](double az, double el) {
        double g = gain_at(cfg.uav_pattern, az, el);
        if (uav_distortion)
            g += uav_distortion->at(az, el);
        return g;
    };

    const double g_los = db_to_linear(gain_at(cfg.gs_pattern, geom.phi_t, geom.theta_t) +
                                      uav_gain_db(geom.phi_r, geom.theta_r));
    const double g_ref = db_to_linear(gain_at(cfg.gs_pattern, geom.phi_t1, geom.theta_t1) +
                                      uav_gain_db(geom.phi_r1, geom.theta_r1));
    const std::complex<double> gamma =
        cfg.forced_gamma ? *cfg.forced_gamma
                         : reflection_coefficient(geom.theta_ref, cfg.ground_rel_permittivity, cfg.polarization);

    const std::complex<double> los = std::sqrt(g_los) / geom.d_3d;
    const std::complex<double> ref =
        gamma * std::sqrt(g_ref) * std::polar(1.0, -geom.delta_tau) / (geom.d1 + geom.d2);
    const double k = lambda / (4.0 * std::numbers::pi);
    return k * k * std::norm(los + ref);
}

double trpl_path_loss_db(const PropagationConfig& cfg, const LinkGeometry& geom, const CalibratedDelta* uav_distortion) {
    const double a = trpl_attenuation(cfg, geom, uav_distortion);
    if (!(a > 0.0))
        return cfg.path_loss_ceiling_db;
    return std::min(-10.0 * std::log10(a), cfg.path_loss_ceiling_db);
}

double trpl_received_power_db(const PropagationConfig& cfg, const LinkGeometry& geom,
                              const CalibratedDelta* uav_distortion) {
    return cfg.tx_power_dbm - trpl_path_loss_db(cfg, geom, uav_distortion);
}

double calibrated_received_power_db(const PropagationConfig& cfg, const LinkGeometry& geom,
                                    const CalibratedDelta& delta_gain) {
    return trpl_received_power_db(cfg, geom) + delta_gain.at(geom.phi_r, geom.theta_r);
}

double PowerModel::received_power_dbm(const GeoPoint& uav) const {
    const LinkGeometry geom = link_geometry(gs, uav, cfg.wavelength());
    return delta_gain ? calibrated_received_power_db(cfg, geom, *delta_gain) : trpl_received_power_db(cfg, geom);
}

} // namespace remkit
