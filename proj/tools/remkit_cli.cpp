// Command-line front end: synthetic scenes, model fitting, reconstruction
// and Monte-Carlo evaluation. Exit codes: 0 ok, 2 validation, 3 runtime.

#include "remkit/calibration.hpp"
#include "remkit/csv_io.hpp"
#include "remkit/errors.hpp"
#include "remkit/harness.hpp"
#include "remkit/json_io.hpp"
#include "remkit/kriging.hpp"
#include "remkit/matrix_completion.hpp"
#include "remkit/scene.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <functional>
#include <sstream>

namespace fs = std::filesystem;
using namespace remkit;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct Common {
    std::string config_path;
    std::string out_path;
};

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path + "'");
    out << text;
}

nlohmann::json load_config(const std::string& path) {
    if (path.empty())
        return nlohmann::json::object();
    return read_json_file(path);
}

fs::path base_of(const std::string& path) { return path.empty() ? fs::path{} : fs::path(path).parent_path(); }

// Flags mirroring EvalConfig; only those given on the command line override the config file.
struct EvalFlags {
    std::string method, model;
    std::optional<std::size_t> m_samples, iterations;
    std::optional<double> radius_m;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;

    void add_to(CLI::App* app) {
        app->add_option("--method", method, "TRPL_only, OK, SK, TG_OK, TG_SK, GPR or MC_GPR");
        app->add_option("--model", model, "baseline or calibrated");
        app->add_option("-M,--m-samples", m_samples, "samples drawn per iteration");
        app->add_option("-R,--radius", radius_m, "Kriging selection radius in meters");
        app->add_option("--iterations", iterations, "Monte-Carlo iterations");
        app->add_option("--seed", seed, "base seed");
        app->add_option("--threads", threads, "worker threads (0 = all cores)");
    }

    EvalConfig resolve(const std::string& config_path) const {
        EvalConfig cfg;
        apply_json(cfg, load_config(config_path), base_of(config_path));
        if (!method.empty())
            cfg.method = method_from_string(method);
        if (!model.empty())
            cfg.model = model_kind_from_string(model);
        if (m_samples)
            cfg.m_samples = *m_samples;
        if (iterations)
            cfg.iterations = *iterations;
        if (radius_m)
            cfg.radius_m = *radius_m;
        if (seed)
            cfg.seed = *seed;
        if (threads)
            cfg.threads = *threads;
        return cfg;
    }
};

int run_synth(const std::string& scene_path, const std::string& out_dir) {
    const auto doc = read_json_file(scene_path);
    const SceneSpec scene = scene_from_json(doc, base_of(scene_path));
    if (!doc.contains("trajectories"))
        throw ValidationError("scene document has no \"trajectories\" list");
    const auto trajectories = trajectories_from_json(doc.at("trajectories"));
    const auto campaigns = generate_campaigns(scene, trajectories);
    fs::create_directories(out_dir);
    for (std::size_t k = 0; k < campaigns.size(); ++k) {
        const fs::path path = fs::path(out_dir) / ("campaign_" + std::to_string(k) + ".csv");
        write_measurements(path, campaigns[k].measurements);
        std::cerr << path.string() << ": " << campaigns[k].measurements.size() << " rows\n";
    }
    std::ofstream(fs::path(out_dir) / "scene.json") << to_json(scene).dump(2) << '\n';
    return 0;
}

PowerModel power_model(const EvalConfig& cfg, const std::string& delta_path) {
    PowerModel pm{cfg.propagation, cfg.gs, std::nullopt};
    if (!delta_path.empty())
        pm.delta_gain = read_delta(fs::path(delta_path), cfg.calibration_min_support);
    return pm;
}

int run_fit_corr(const Common& c, const std::string& input, const std::string& delta_path, bool fix_a_one) {
    EvalConfig cfg;
    apply_json(cfg, load_config(c.config_path), base_of(c.config_path));
    const auto rows = read_measurements(fs::path(input));
    const auto sf = extract_sf(rows, power_model(cfg, delta_path));
    const auto table = empirical_correlation(sf, cfg.binning);
    const auto model = fit_correlation_model(table, fix_a_one);
    nlohmann::json out = {{"model", to_json(model)},
                          {"fit_residual", correlation_fit_residual(table, model)},
                          {"n", rows.size()},
                          {"table", to_json(table)}};
    write_text(c.out_path, out.dump(2) + "\n");
    return 0;
}

int run_calibrate(const Common& c, const std::string& train, double bin_deg, int min_support) {
    EvalConfig cfg;
    apply_json(cfg, load_config(c.config_path), base_of(c.config_path));
    const auto rows = read_measurements(fs::path(train));
    const auto amplitudes = estimate_a_uav(rows, cfg.gs, cfg.propagation.tx_power_dbm);
    const auto effective = estimate_effective_pattern(amplitudes.samples, cfg.propagation.gs_pattern,
                                                      cfg.propagation.wavelength(), bin_deg, min_support);
    const auto delta = delta_gain(effective, cfg.propagation.uav_pattern);
    if (c.out_path.empty() || c.out_path == "-")
        write_delta(std::cout, delta);
    else
        write_delta(fs::path(c.out_path), delta);
    std::cerr << "skipped degenerate links: " << amplitudes.skipped << '\n';
    return 0;
}

int run_reconstruct(const Common& c, const EvalFlags& flags, const std::string& input, const std::string& delta_path,
                    double spacing, std::optional<double> altitude, const std::string& dump_dir) {
    EvalConfig cfg = flags.resolve(c.config_path);
    const auto rows = read_measurements(fs::path(input));
    const PowerModel pm = power_model(cfg, delta_path);
    std::vector<SfSample> sf = extract_sf(rows, pm);
    if (sf.empty())
        throw InsufficientData("no input measurements");
    const CorrelationModel corr =
        cfg.correlation ? *cfg.correlation : fit_correlation_model(empirical_correlation(sf, cfg.binning));
    const double mean = sample_mean(sf);

    GridSpec spec = build_grid(sf, spacing);
    if (altitude)
        spec.origin.alt = *altitude;

    std::function<std::pair<double, double>(const GeoPoint&)> predict;
    std::unique_ptr<KrigingPredictor> kriging;
    std::unique_ptr<GprModel> gpr;
    std::unique_ptr<McPipeline> mc;
    switch (cfg.method) {
    case Method::TRPL_only:
        predict = [](const GeoPoint&) { return std::pair{0.0, std::nan("")}; };
        break;
    case Method::OK:
    case Method::SK:
    case Method::TG_OK:
    case Method::TG_SK: {
        KrigingConfig kc;
        kc.radius_m = cfg.radius_m;
        kc.mean_z = mean;
        kc.variant = cfg.method == Method::OK      ? KrigingVariant::OK
                     : cfg.method == Method::SK    ? KrigingVariant::SK
                     : cfg.method == Method::TG_OK ? KrigingVariant::TG_OK
                                                   : KrigingVariant::TG_SK;
        std::optional<CorrelationModel> model_u;
        if (cfg.method == Method::TG_OK || cfg.method == Method::TG_SK) {
            model_u = corr;
            model_u->sigma_z = 1.0;
        }
        kriging = std::make_unique<KrigingPredictor>(sf, corr, kc, model_u);
        predict = [&](const GeoPoint& p) {
            const auto r = kriging->predict(p);
            return std::pair{r.z_hat, std::sqrt(r.mse)};
        };
        break;
    }
    case Method::GPR:
    case Method::MC_GPR: {
        std::vector<SfSample> centered = sf;
        for (auto& s : centered)
            s.z -= mean;
        const auto hyper = estimate_hyperparameters(centered, corr);
        gpr = std::make_unique<GprModel>(centered, corr, hyper.sigma_y, hyper.sigma_gp);
        if (cfg.method == Method::GPR) {
            predict = [&](const GeoPoint& p) {
                const auto r = gpr->predict(p);
                return std::pair{r.z_hat + mean, std::sqrt(r.variance)};
            };
        } else {
            McConfig mcc = cfg.mc;
            mcc.spacing_m = spacing;
            mc = std::make_unique<McPipeline>(*gpr, mcc);
            if (!dump_dir.empty()) {
                fs::create_directories(dump_dir);
                write_matrix(fs::path(dump_dir) / "z.csv", mc->grid().z);
                write_matrix(fs::path(dump_dir) / "sigma.csv", mc->grid().sigma);
                write_matrix(fs::path(dump_dir) / "z_mc.csv", mc->completion().z);
                write_matrix(fs::path(dump_dir) / "z_ds.csv", mc->deep_shadow());
                write_matrix(fs::path(dump_dir) / "z_ds_dilated.csv", mc->dilated_deep_shadow());
            }
            predict = [&](const GeoPoint& p) { return std::pair{mc->predict(p) + mean, std::nan("")}; };
        }
        break;
    }
    }

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!c.out_path.empty() && c.out_path != "-") {
        file.open(c.out_path);
        if (!file)
            throw Error("cannot write '" + c.out_path + "'");
        out = &file;
    }
    *out << "row,col,lat_deg,lon_deg,alt_m,trpl_dbm,sf_db,rsrp_dbm,sigma_db\n";
    for (Eigen::Index i = 0; i < spec.n_rows; ++i)
        for (Eigen::Index j = 0; j < spec.n_cols; ++j) {
            const GeoPoint p = spec.node(i, j);
            const double det = pm.received_power_dbm(p);
            const auto [z, sd] = predict(p);
            *out << i << ',' << j << ',' << format_number(p.lat) << ',' << format_number(p.lon) << ','
                 << format_number(p.alt) << ',' << format_number(det) << ',' << format_number(z) << ','
                 << format_number(det + z) << ',' << format_number(sd) << '\n';
        }
    return 0;
}

int run_eval(const Common& c, const EvalFlags& flags, const std::string& train, const std::string& test) {
    const EvalConfig cfg = flags.resolve(c.config_path);
    const auto train_rows = train.empty() ? std::vector<Measurement>{} : read_measurements(fs::path(train));
    const auto test_rows = read_measurements(fs::path(test));
    const auto report = monte_carlo_eval(cfg, train_rows, test_rows);
    if (report.separation && !report.separation->separated)
        std::cerr << "warning: " << report.separation->message << '\n';
    write_text(c.out_path, to_json(report).dump(2) + "\n");
    std::cerr << "median RMSE " << format_number(report.median_rmse_db) << " dB over " << report.rmse_db.size()
              << " iterations\n";
    return 0;
}

int run_sweep(const Common& c, const EvalFlags& flags, const std::string& train, const std::vector<std::string>& tests,
              const std::string& axis_name, const std::vector<std::string>& values, const std::string& report_path) {
    const EvalConfig cfg = flags.resolve(c.config_path);
    const SweepAxis axis = sweep_axis_from_string(axis_name);
    const auto train_rows = train.empty() ? std::vector<Measurement>{} : read_measurements(fs::path(train));
    std::vector<std::vector<Measurement>> test_rows;
    for (const auto& t : tests)
        test_rows.push_back(read_measurements(fs::path(t)));
    std::vector<MeasurementCampaign> campaigns;
    for (const auto& rows : test_rows)
        campaigns.emplace_back(rows);
    std::vector<const CampaignAccess*> access;
    for (const auto& cm : campaigns)
        access.push_back(&cm);
    const auto reports = sweep(cfg, axis, values, train_rows, access);

    std::ostringstream csv;
    write_sweep_csv(csv, axis, values, reports);
    write_text(c.out_path, csv.str());
    if (!report_path.empty()) {
        nlohmann::json all = nlohmann::json::array();
        for (const auto& r : reports)
            all.push_back(to_json(r));
        write_text(report_path, all.dump(2) + "\n");
    }
    for (std::size_t k = 0; k < reports.size(); ++k)
        std::cerr << axis_name << '=' << values[k] << ": median RMSE " << format_number(reports[k].median_rmse_db)
                  << " dB\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radio environment map reconstruction toolkit"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "JSON configuration file");
        sub->add_option("-o,--out", common.out_path, "output path (default stdout)");
    };

    std::string scene_path, out_dir = ".";
    auto* synth = app.add_subcommand("synth", "generate synthetic campaigns from a scene JSON");
    synth->add_option("--scene", scene_path, "scene JSON")->required();
    synth->add_option("--out-dir", out_dir, "directory for campaign CSVs");

    std::string input, delta_path;
    bool fix_a_one = false;
    auto* fit = app.add_subcommand("fit-corr", "fit the shadow-fading correlation model");
    add_common(fit);
    fit->add_option("--input", input, "measurement CSV")->required();
    fit->add_option("--delta", delta_path, "calibration delta CSV");
    fit->add_flag("--fix-a-one", fix_a_one, "single-exponential horizontal model");

    std::string train;
    double bin_deg = 5.0;
    int min_support = 25;
    auto* cal = app.add_subcommand("calibrate", "estimate the UAV antenna gain correction");
    add_common(cal);
    cal->add_option("--train", train, "training measurement CSV")->required();
    cal->add_option("--bin-deg", bin_deg, "bin width in degrees");
    cal->add_option("--min-support", min_support, "minimum samples per bin");

    EvalFlags flags;
    double spacing = 5.0;
    std::optional<double> altitude;
    std::string dump_dir;
    auto* rec = app.add_subcommand("reconstruct", "predict a map grid from measurements");
    add_common(rec);
    flags.add_to(rec);
    rec->add_option("--input", input, "measurement CSV")->required();
    rec->add_option("--delta", delta_path, "calibration delta CSV");
    rec->add_option("--spacing", spacing, "grid spacing in meters");
    rec->add_option("--altitude", altitude, "grid altitude (default: mean input altitude)");
    rec->add_option("--dump-dir", dump_dir, "write intermediate grids (MC_GPR only)");

    std::string test;
    auto* ev = app.add_subcommand("eval", "Monte-Carlo sparse-sampling evaluation");
    add_common(ev);
    flags.add_to(ev);
    ev->add_option("--train", train, "training campaign CSV");
    ev->add_option("--test", test, "test campaign CSV")->required();

    std::vector<std::string> tests, values;
    std::string axis, report_path;
    auto* sw = app.add_subcommand("sweep", "evaluate over a parameter axis");
    add_common(sw);
    flags.add_to(sw);
    sw->add_option("--train", train, "training campaign CSV");
    sw->add_option("--test", tests, "test campaign CSV(s)")->required();
    sw->add_option("--axis", axis, "M, R, method or altitude_campaign")->required();
    sw->add_option("--values", values, "axis values")->required();
    sw->add_option("--report", report_path, "JSON reports");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (synth->parsed())
            return run_synth(scene_path, out_dir);
        if (fit->parsed())
            return run_fit_corr(common, input, delta_path, fix_a_one);
        if (cal->parsed())
            return run_calibrate(common, train, bin_deg, min_support);
        if (rec->parsed())
            return run_reconstruct(common, flags, input, delta_path, spacing, altitude, dump_dir);
        if (ev->parsed())
            return run_eval(common, flags, train, test);
        if (sw->parsed())
            return run_sweep(common, flags, train, tests, axis, values, report_path);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
