#include "remkit/json_io.hpp"

#include "remkit/csv_io.hpp"
#include "remkit/errors.hpp"

#include <fstream>

namespace remkit {

using nlohmann::json;

namespace {

template <typename Fn>
auto guarded(const char* what, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed ") + what + ": " + e.what());
    }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key))
        out = j.at(key).get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename Matrix>
Matrix matrix_from_json(const json& j, std::size_t rows, std::size_t cols) {
    if (!j.is_array() || j.size() != rows)
        throw ValidationError("matrix row count mismatch");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw ValidationError("matrix column count mismatch");
        for (std::size_t k = 0; k < cols; ++k)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                j[i][k].get<typename Matrix::Scalar>();
    }
    return m;
}

} // namespace

json to_json(const GeoPoint& p) { return {{"lat", p.lat}, {"lon", p.lon}, {"alt", p.alt}}; }

GeoPoint geo_point_from_json(const json& j) {
    return guarded("point", [&] {
        GeoPoint p{j.at("lat").get<double>(), j.at("lon").get<double>(), j.value("alt", 0.0)};
        validate(p);
        return p;
    });
}

json to_json(const CorrelationModel& m) {
    return {{"a", m.a}, {"p1", m.p1}, {"p2", m.p2}, {"q", m.q}, {"sigma_z", m.sigma_z}};
}

CorrelationModel correlation_from_json(const json& j) {
    return guarded("correlation model", [&] {
        CorrelationModel m;
        maybe(j, "a", m.a);
        maybe(j, "p1", m.p1);
        maybe(j, "p2", m.p2);
        maybe(j, "q", m.q);
        maybe(j, "sigma_z", m.sigma_z);
        m.validate();
        return m;
    });
}

json to_json(const CorrelationTable& t) {
    json bins = json::array();
    for (std::size_t ih = 0; ih < t.n_dh(); ++ih)
        for (std::size_t iv = 0; iv < t.n_dv(); ++iv) {
            const auto& b = t.bin(ih, iv);
            if (b.empty())
                continue;
            bins.push_back({{"dh_lo", t.dh_edges[ih]},
                            {"dh_hi", t.dh_edges[ih + 1]},
                            {"dv_lo", t.dv_edges[iv]},
                            {"dv_hi", t.dv_edges[iv + 1]},
                            {"mean_dh", b.mean_dh},
                            {"mean_dv", b.mean_dv},
                            {"correlation", b.value},
                            {"pairs", b.count}});
        }
    return {{"sigma_db", t.sigma}, {"mean_db", t.mean}, {"pairs_visited", t.pairs_visited}, {"stride", t.stride},
            {"bins", bins}};
}

json to_json(const AntennaPattern& p) {
    if (p.label == "isotropic" || p.label == "half_wave_dipole")
        return p.label;
    return {{"label", p.label}, {"az_deg", p.az_grid}, {"el_deg", p.el_grid}, {"gain_dbi", matrix_json(p.gain)}};
}

AntennaPattern pattern_from_json(const json& j, const std::filesystem::path& base_dir) {
    return guarded("antenna pattern", [&] {
        if (j.is_string()) {
            const auto name = j.get<std::string>();
            if (name == "isotropic")
                return AntennaPattern::isotropic();
            if (name == "half_wave_dipole")
                return AntennaPattern::half_wave_dipole();
            return read_pattern(resolve(base_dir, name));
        }
        AntennaPattern p;
        p.az_grid = j.at("az_deg").get<std::vector<double>>();
        p.el_grid = j.at("el_deg").get<std::vector<double>>();
        p.gain = matrix_from_json<Eigen::MatrixXd>(j.at("gain_dbi"), p.az_grid.size(), p.el_grid.size());
        p.label = j.value("label", std::string("inline"));
        p.validate();
        return p;
    });
}

json to_json(const CalibratedDelta& d) {
    json support = json::array();
    for (Eigen::Index i = 0; i < d.support.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < d.support.cols(); ++k)
            row.push_back(d.support(i, k));
        support.push_back(std::move(row));
    }
    return {{"bin_deg", d.bin_deg}, {"min_support", d.min_support}, {"delta_db", matrix_json(d.delta_db)},
            {"support", support}};
}

CalibratedDelta delta_from_json(const json& j, const std::filesystem::path& base_dir) {
    return guarded("delta table", [&] {
        if (j.contains("csv"))
            return read_delta(resolve(base_dir, j.at("csv").get<std::string>()), j.value("min_support", 25));
        const double bin = j.value("bin_deg", 5.0);
        if (j.contains("sectors")) {
            std::vector<SectorDistortion> sectors;
            for (const auto& s : j.at("sectors"))
                sectors.push_back({s.at("az_min_deg").get<double>(), s.at("az_max_deg").get<double>(),
                                   s.value("el_min_deg", -90.0), s.value("el_max_deg", 90.0),
                                   s.at("delta_db").get<double>()});
            return make_sector_distortion(bin, sectors);
        }
        CalibratedDelta d = CalibratedDelta::zeros(bin);
        d.min_support = j.value("min_support", 25);
        d.delta_db = matrix_from_json<Eigen::MatrixXd>(j.at("delta_db"), d.az_grid.size(), d.el_grid.size());
        d.support = matrix_from_json<Eigen::MatrixXi>(j.at("support"), d.az_grid.size(), d.el_grid.size());
        return d;
    });
}

json to_json(const PropagationConfig& c) {
    json j = {{"carrier_hz", c.carrier_hz},
              {"tx_power_dbm", c.tx_power_dbm},
              {"ground_rel_permittivity", c.ground_rel_permittivity},
              {"polarization", c.polarization == Polarization::vertical ? "vertical" : "horizontal"},
              {"gs_pattern", to_json(c.gs_pattern)},
              {"uav_pattern", to_json(c.uav_pattern)},
              {"path_loss_ceiling_db", c.path_loss_ceiling_db}};
    if (c.forced_gamma)
        j["forced_gamma"] = {c.forced_gamma->real(), c.forced_gamma->imag()};
    return j;
}

void apply_json(PropagationConfig& into, const json& j, const std::filesystem::path& base_dir) {
    guarded("propagation config", [&] {
        maybe(j, "carrier_hz", into.carrier_hz);
        maybe(j, "tx_power_dbm", into.tx_power_dbm);
        maybe(j, "ground_rel_permittivity", into.ground_rel_permittivity);
        maybe(j, "path_loss_ceiling_db", into.path_loss_ceiling_db);
        if (j.contains("polarization")) {
            const auto pol = j.at("polarization").get<std::string>();
            if (pol == "vertical")
                into.polarization = Polarization::vertical;
            else if (pol == "horizontal")
                into.polarization = Polarization::horizontal;
            else
                throw ValidationError("unknown polarization '" + pol + "'");
        }
        if (j.contains("gs_pattern"))
            into.gs_pattern = pattern_from_json(j.at("gs_pattern"), base_dir);
        if (j.contains("uav_pattern"))
            into.uav_pattern = pattern_from_json(j.at("uav_pattern"), base_dir);
        if (j.contains("forced_gamma")) {
            const auto& g = j.at("forced_gamma");
            if (g.is_null())
                into.forced_gamma.reset();
            else if (g.is_number())
                into.forced_gamma = std::complex<double>(g.get<double>(), 0.0);
            else
                into.forced_gamma = std::complex<double>(g.at(0).get<double>(), g.at(1).get<double>());
        }
        into.validate();
        return 0;
    });
}

json to_json(const SceneSpec& s) {
    json blobs = json::array();
    for (const auto& b : s.blobs)
        blobs.push_back({{"center", to_json(b.center)}, {"radius_m", b.radius_m}, {"depth_db", b.depth_db}});
    json j = {{"gs", to_json(s.gs)},     {"propagation", to_json(s.cfg)}, {"correlation", to_json(s.corr)},
              {"noise_sd", s.noise_sd}, {"blobs", blobs},                {"seed", s.seed}};
    if (s.pattern_distortion)
        j["pattern_distortion"] = to_json(*s.pattern_distortion);
    return j;
}

SceneSpec scene_from_json(const json& j, const std::filesystem::path& base_dir) {
    return guarded("scene", [&] {
        SceneSpec s;
        s.gs = geo_point_from_json(j.at("gs"));
        if (j.contains("propagation"))
            apply_json(s.cfg, j.at("propagation"), base_dir);
        if (j.contains("correlation"))
            s.corr = correlation_from_json(j.at("correlation"));
        maybe(j, "noise_sd", s.noise_sd);
        maybe(j, "seed", s.seed);
        if (j.contains("blobs"))
            for (const auto& b : j.at("blobs"))
                s.blobs.push_back({geo_point_from_json(b.at("center")), b.value("radius_m", 50.0),
                                   b.value("depth_db", -10.0)});
        if (j.contains("pattern_distortion") && !j.at("pattern_distortion").is_null())
            s.pattern_distortion = delta_from_json(j.at("pattern_distortion"), base_dir);
        s.validate();
        return s;
    });
}

std::vector<Trajectory> trajectories_from_json(const json& j) {
    return guarded("trajectory list", [&] {
        std::vector<Trajectory> out;
        for (const auto& t : j) {
            const auto kind = trajectory_kind_from_string(t.at("kind").get<std::string>());
            const double spacing = t.value("spacing_m", 5.0);
            std::vector<double> altitudes;
            if (t.contains("altitudes_m"))
                altitudes = t.at("altitudes_m").get<std::vector<double>>();
            else
                altitudes.push_back(t.value("altitude_m", 40.0));
            if (kind == TrajectoryKind::custom) {
                std::vector<GeoPoint> vertices;
                for (const auto& v : t.at("vertices"))
                    vertices.push_back(geo_point_from_json(v));
                const Trajectory base = Trajectory::custom(vertices, spacing);
                if (t.contains("altitudes_m") || t.contains("altitude_m"))
                    for (double a : altitudes)
                        out.push_back(base.at_altitude(a));
                else
                    out.push_back(base);
                continue;
            }
            const GeoPoint center = geo_point_from_json(t.at("center"));
            for (double a : altitudes) {
                switch (kind) {
                case TrajectoryKind::lawnmower:
                    out.push_back(Trajectory::lawnmower(center, t.at("width_m").get<double>(),
                                                        t.at("height_m").get<double>(),
                                                        t.value("lane_spacing_m", 20.0), a, spacing));
                    break;
                case TrajectoryKind::zigzag:
                    out.push_back(Trajectory::zigzag(center, t.at("width_m").get<double>(),
                                                     t.at("height_m").get<double>(), t.value("legs", 8), a, spacing));
                    break;
                case TrajectoryKind::ring:
                    out.push_back(Trajectory::ring(center, t.at("radius_m").get<double>(), a, spacing));
                    break;
                case TrajectoryKind::custom:
                    break;
                }
            }
        }
        return out;
    });
}

json to_json(const EvalConfig& c) {
    json j = {{"method", to_string(c.method)},
              {"model", to_string(c.model)},
              {"m_samples", c.m_samples},
              {"radius_m", c.radius_m},
              {"iterations", c.iterations},
              {"seed", c.seed},
              {"threads", c.threads},
              {"gs", to_json(c.gs)},
              {"propagation", to_json(c.propagation)},
              {"mc", {{"alpha", c.mc.alpha},
                      {"t_v", c.mc.t_v},
                      {"t_lambda", c.mc.t_lambda},
                      {"dilation_radius", c.mc.dilation_radius},
                      {"max_bisection_iters", c.mc.max_bisection_iters},
                      {"spacing_m", c.mc.spacing_m}}},
              {"calibration_bin_deg", c.calibration_bin_deg},
              {"calibration_min_support", c.calibration_min_support},
              {"elevation_bin_deg", c.elevation_bin_deg}};
    j["correlation"] = c.correlation ? to_json(*c.correlation) : json(nullptr);
    return j;
}

void apply_json(EvalConfig& into, const json& j, const std::filesystem::path& base_dir) {
    guarded("evaluation config", [&] {
        if (j.contains("method"))
            into.method = method_from_string(j.at("method").get<std::string>());
        if (j.contains("model"))
            into.model = model_kind_from_string(j.at("model").get<std::string>());
        maybe(j, "m_samples", into.m_samples);
        maybe(j, "radius_m", into.radius_m);
        maybe(j, "iterations", into.iterations);
        maybe(j, "seed", into.seed);
        maybe(j, "threads", into.threads);
        maybe(j, "calibration_bin_deg", into.calibration_bin_deg);
        maybe(j, "calibration_min_support", into.calibration_min_support);
        maybe(j, "elevation_bin_deg", into.elevation_bin_deg);
        if (j.contains("gs"))
            into.gs = geo_point_from_json(j.at("gs"));
        if (j.contains("propagation"))
            apply_json(into.propagation, j.at("propagation"), base_dir);
        if (j.contains("correlation")) {
            if (j.at("correlation").is_null())
                into.correlation.reset();
            else
                into.correlation = correlation_from_json(j.at("correlation"));
        }
        if (j.contains("mc")) {
            const auto& m = j.at("mc");
            maybe(m, "alpha", into.mc.alpha);
            maybe(m, "t_v", into.mc.t_v);
            maybe(m, "t_lambda", into.mc.t_lambda);
            maybe(m, "dilation_radius", into.mc.dilation_radius);
            maybe(m, "max_bisection_iters", into.mc.max_bisection_iters);
            maybe(m, "spacing_m", into.mc.spacing_m);
        }
        return 0;
    });
}

json to_json(const EvaluationReport& r) {
    json bins = json::array();
    for (const auto& b : r.per_elevation)
        bins.push_back({{"el_lo_deg", b.lo_deg}, {"el_hi_deg", b.hi_deg}, {"rmse_db", b.rmse_db}, {"count", b.count}});
    json j = {{"config", to_json(r.config)},
              {"median_rmse_db", r.median_rmse_db},
              {"rmse_db", r.rmse_db},
              {"per_elevation", bins},
              {"counters",
               {{"kriging_fallbacks", r.counters.kriging_fallbacks},
                {"jittered_solves", r.counters.jittered_solves},
                {"tg_variant_fallbacks", r.counters.tg_variant_fallbacks},
                {"gpr_variance_clamps", r.counters.gpr_variance_clamps},
                {"mc_iteration_caps", r.counters.mc_iteration_caps},
                {"mc_degenerate_grids", r.counters.mc_degenerate_grids},
                {"calibration_skipped", r.counters.calibration_skipped}}},
              {"correlation_used", to_json(r.correlation_used)},
              {"gpr_hyperparameters",
               {{"sigma_y", r.gpr_hyperparameters.sigma_y}, {"sigma_gp", r.gpr_hyperparameters.sigma_gp}}},
              {"sf_prior_mean_db", r.sf_prior_mean_db},
              {"n_train", r.n_train},
              {"n_test", r.n_test}};
    if (r.separation)
        j["separation"] = {{"vertical_separation_m", r.separation->vertical_separation_m},
                           {"trajectory_overlap", r.separation->trajectory_overlap},
                           {"separated", r.separation->separated},
                           {"message", r.separation->message}};
    return j;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("invalid JSON in '" + path.string() + "': " + e.what());
    }
}

} // namespace remkit
