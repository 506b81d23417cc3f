#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "paramtrack/config.hpp"
#include "paramtrack/csv.hpp"
#include "paramtrack/errors.hpp"
#include "paramtrack/harness.hpp"
#include "paramtrack/hyperopt.hpp"
#include "paramtrack/pipeline.hpp"
#include "paramtrack/plot.hpp"
#include "paramtrack/rng.hpp"

namespace {

using namespace paramtrack;
namespace fs = std::filesystem;

std::optional<std::uint64_t> env_seed() {
    const char* v = std::getenv("PARAMTRACK_SEED");
    if (!v || !*v) return std::nullopt;
    return std::strtoull(v, nullptr, 10);
}

/// Priority: --seed flag, then PARAMTRACK_SEED, then the config/default.
void resolve_seed(RunConfig& config, const std::optional<std::uint64_t>& flag) {
    if (flag)
        config.seed = *flag;
    else if (auto env = env_seed())
        config.seed = *env;
}

int default_jobs() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 2 : static_cast<int>(n);
}

int cmd_simulate(const std::string& system, const std::string& tracked, double duration,
                 double noise, int stride, long long transient,
                 const std::optional<std::uint64_t>& seed_flag, const std::string& out) {
    SystemName name = system_name_from_str(system);
    SystemSpec spec;
    switch (name) {
    case SystemName::FoodChain: spec = SystemSpec::food_chain(tracked.empty() ? "K" : tracked); break;
    case SystemName::Rossler: spec = SystemSpec::rossler(tracked.empty() ? "c" : tracked); break;
    case SystemName::MackeyGlass: spec = SystemSpec::mackey_glass(tracked.empty() ? "tau" : tracked); break;
    }
    std::uint64_t seed = seed_flag ? *seed_flag : env_seed().value_or(kDefaultSeed);

    Simulator sim(spec, seed);
    WaveformSpec constant = WaveformSpec::constant(spec.nominal_value);
    if (transient > 0) sim.run_transient(constant, transient);
    sim.set_time(0.0);
    Trajectory traj = sim.advance(constant, duration, stride, noise);

    const char* fc_cols[] = {"R", "C", "P"};
    const char* xyz_cols[] = {"x", "y", "z"};
    std::vector<std::string> header{"t"};
    for (int i = 0; i < spec.dimension; ++i)
        header.push_back(name == SystemName::FoodChain ? fc_cols[i]
                         : name == SystemName::Rossler ? xyz_cols[i]
                                                       : "x");
    CsvWriter csv(out, header);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        std::vector<double> row{traj.time(k)};
        const double* s = traj.state(k);
        for (int i = 0; i < spec.dimension; ++i) row.push_back(s[i]);
        csv.row(row);
    }
    std::cout << "trajectory " << out << " samples=" << traj.size() << " dt="
              << format_num(traj.dt) << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::optional<std::uint64_t>& seed_flag,
              const std::string& out) {
    RunConfig config = load_run_config(config_path);
    resolve_seed(config, seed_flag);
    TrainedTracker tracker = train_tracker(config);
    save_tracker(tracker, out);
    std::cout << "tracker " << out << " config=" << hex16(fingerprint(config))
              << " calib_gain=" << format_num(tracker.calib.gain)
              << " calib_offset=" << format_num(tracker.calib.offset) << "\n";
    return 0;
}

int cmd_track(const std::string& config_path, const std::string& tracker_path,
              const std::optional<std::uint64_t>& seed_flag, const std::string& out) {
    RunConfig config = load_run_config(config_path);
    resolve_seed(config, seed_flag);
    TrainedTracker tracker = load_tracker(tracker_path);
    TrackingResult result = run_tracking(config, tracker);
    write_csv(result, out);
    std::cout << "rmse=" << format_num(result.rmse) << " nrmse=" << format_num(result.nrmse)
              << " out=" << out << "\n";
    return 0;
}

int cmd_calibrate(const std::string& config_path, const std::string& tracker_path,
                  const std::string& mode, const std::optional<std::uint64_t>& seed_flag,
                  std::string out) {
    RunConfig config = load_run_config(config_path);
    resolve_seed(config, seed_flag);
    config.calibration = calibration_mode_from_name(mode);
    TrainedTracker tracker = load_tracker(tracker_path);
    tracker.calib = Calibration{};
    tracker.calib = run_calibration(config, tracker);
    if (out.empty()) out = tracker_path;
    save_tracker(tracker, out);
    std::cout << "calibrated " << out << " gain=" << format_num(tracker.calib.gain)
              << " offset=" << format_num(tracker.calib.offset) << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::optional<std::uint64_t>& seed_flag,
              const std::string& outdir, int jobs) {
    SweepSpec spec = load_sweep_spec(config_path);
    resolve_seed(spec.base, seed_flag);
    SweepTable table = sweep(spec, jobs);

    fs::path dir = fs::path(outdir) /
                   hex16(mix_seed(fingerprint(spec.base), sweep_axis_name(spec.axis),
                                  {static_cast<std::uint64_t>(spec.values.size()),
                                   static_cast<std::uint64_t>(spec.realizations)}));
    fs::create_directories(dir);
    write_rows_csv(table.rows, dir / "rows.csv");
    write_summary_csv(table.summary, dir / "summary.csv");

    PlotTable plot;
    plot.title = std::string("Sweep over ") + sweep_axis_name(spec.axis);
    plot.x_label = sweep_axis_name(spec.axis);
    plot.y_label = "mean RMSE";
    plot.provenance = std::string(kCodeVersion) + " config " + hex16(fingerprint(spec.base));
    if (spec.axis == SweepAxis::Mask) {
        for (const auto& s : table.summary) plot.groups.push_back(s.value_label);
        plot.bar_series = {"mean_rmse"};
        plot.bar_values.resize(static_cast<Eigen::Index>(table.summary.size()), 1);
        for (std::size_t i = 0; i < table.summary.size(); ++i)
            plot.bar_values(static_cast<Eigen::Index>(i), 0) = table.summary[i].mean_rmse;
        render_plot(plot, PlotKind::Bar, dir / "sweep.svg");
    } else {
        PlotSeries series{"mean RMSE", {}, {}, {}};
        for (const auto& s : table.summary) {
            series.x.push_back(s.value_number);
            series.y.push_back(s.mean_rmse);
            series.yerr.push_back(s.std_rmse);
        }
        plot.series = {series};
        render_plot(plot, PlotKind::Line, dir / "sweep.svg");
    }

    std::ofstream manifest(dir / "manifest.txt");
    manifest << "experiment sweep_" << sweep_axis_name(spec.axis) << '\n'
             << "code_version " << kCodeVersion << '\n'
             << "config " << hex16(fingerprint(spec.base)) << '\n'
             << "seed " << spec.base.seed << '\n'
             << "realizations " << spec.realizations << '\n';
    std::cout << "sweep " << dir.string() << " values=" << table.summary.size()
              << " realizations=" << spec.realizations << "\n";
    return 0;
}

int cmd_hyperopt(const std::string& config_path, const std::optional<std::uint64_t>& seed_flag,
                 const std::string& outdir) {
    HyperoptSpec spec = load_hyperopt_spec(config_path);
    resolve_seed(spec.base, seed_flag);

    Objective objective = [&spec](const Eigen::VectorXd& x) {
        ReservoirHyperparams hyper = hyper_from_point(spec.space, x, spec.base.hyper);
        return tracking_objective(hyper, spec.base, spec.n_seeds);
    };
    OptRecord record = optimize(spec.space, objective, spec.budget, spec.base.seed, spec.mode);

    fs::path dir = fs::path(outdir) / hex16(mix_seed(fingerprint(spec.base), "hyperopt",
                                                     {static_cast<std::uint64_t>(spec.budget)}));
    fs::create_directories(dir);
    write_csv(record, spec.space, dir / "evaluations.csv");

    ReservoirHyperparams best = hyper_from_point(spec.space, record.best_point(),
                                                 spec.base.hyper);
    nlohmann::json fragment;
    fragment["reservoir"]["size"] = best.size;
    fragment["reservoir"]["spectral_radius"] = best.spectral_radius;
    fragment["reservoir"]["input_scaling"] = best.input_scaling;
    fragment["reservoir"]["leakage"] = best.leakage;
    fragment["reservoir"]["density"] = best.density;
    fragment["reservoir"]["bias_scaling"] = best.bias_scaling;
    fragment["reservoir"]["ridge"] = best.ridge;
    fragment["reservoir"]["washout"] = best.washout;
    std::ofstream(dir / "best.json") << fragment.dump(2) << '\n';

    std::cout << "hyperopt best=" << format_num(record.best_value())
              << " evaluations=" << record.values.size() << " out=" << dir.string() << "\n";
    return 0;
}

int cmd_reproduce(const std::string& figure, const std::optional<std::uint64_t>& seed_flag,
                  const std::string& outdir, bool fast, int jobs) {
    ReproduceOptions options;
    options.master_seed = seed_flag ? *seed_flag : env_seed().value_or(kDefaultSeed);
    options.fast = fast;
    options.jobs = jobs;
    Manifest manifest = reproduce_figure(figure, outdir, options);
    int failed = 0;
    for (const auto& [key, value] : manifest.entries)
        if (value.rfind("ok", 0) != 0) ++failed;
    std::cout << "reproduced " << figure << " out=" << manifest.directory.string()
              << " artifacts=" << manifest.entries.size() << " failed=" << failed << "\n";
    return failed == 0 ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reservoir-computing toolkit for tracking time-varying parameters of "
                 "nonlinear systems from partial state observation"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::uint64_t> seed_flag;
    app.add_option("--seed", seed_flag,
                   "Master seed for all randomness (overrides PARAMTRACK_SEED and config)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Integrate a benchmark system and write a trajectory CSV");
    std::string sim_system, sim_tracked, sim_out = "trajectory.csv";
    double sim_duration = 1000.0, sim_noise = 0.0;
    int sim_stride = 1;
    long long sim_transient = 0;
    simulate->add_option("--system", sim_system, "System: foodchain, rossler or mackeyglass")->required();
    simulate->add_option("--tracked", sim_tracked, "Tracked parameter name (default: K / c / tau)");
    simulate->add_option("--duration", sim_duration, "Run length in model time units (multiple of dt)");
    simulate->add_option("--noise", sim_noise, "Dynamical noise level sigma_dyn (state units per sqrt(time))");
    simulate->add_option("--stride", sim_stride, "Record every N-th integration step");
    simulate->add_option("--transient", sim_transient, "Integration steps discarded before recording");
    simulate->add_option("--out", sim_out, "Output CSV path");

    // train
    auto* train = app.add_subcommand("train", "Train a tracker from a run-config JSON");
    std::string train_config, train_out = "tracker.txt";
    train->add_option("--config", train_config, "Run-config JSON path")->required();
    train->add_option("--out", train_out, "Output tracker bundle path");

    // track
    auto* track = app.add_subcommand("track", "Track a test run with a saved tracker");
    std::string track_config, track_tracker, track_out = "tracking.csv";
    track->add_option("--config", track_config, "Run-config JSON path")->required();
    track->add_option("--tracker", track_tracker, "Tracker bundle path")->required();
    track->add_option("--out", track_out, "Output CSV path (t, p_true, o_tracked)");

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "Recompute a saved tracker's output correction");
    std::string cal_config, cal_tracker, cal_mode = "affine", cal_out;
    calibrate->add_option("--config", cal_config, "Run-config JSON path")->required();
    calibrate->add_option("--tracker", cal_tracker, "Tracker bundle path")->required();
    calibrate->add_option("--mode", cal_mode, "Correction mode: affine, offset or none");
    calibrate->add_option("--out", cal_out, "Output tracker path (default: overwrite input)");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a sweep spec and write rows/summary/plot");
    std::string sweep_config, sweep_out = "out/sweep";
    int sweep_jobs = default_jobs();
    sweep_cmd->add_option("--config", sweep_config, "Sweep-spec JSON path")->required();
    sweep_cmd->add_option("--out", sweep_out, "Output directory root");
    sweep_cmd->add_option("--jobs", sweep_jobs, "Worker thread count");

    // hyperopt
    auto* hyper_cmd = app.add_subcommand("hyperopt", "Bayesian-optimize the reservoir hyperparameters");
    std::string hyper_config, hyper_out = "out/hyperopt";
    hyper_cmd->add_option("--config", hyper_config, "Hyperopt-spec JSON path")->required();
    hyper_cmd->add_option("--out", hyper_out, "Output directory root");

    // reproduce
    auto* repro = app.add_subcommand("reproduce", "Re-run a canned study (fig2, fig3 or fig4)");
    std::string repro_figure, repro_out = "out";
    bool repro_fast = false;
    int repro_jobs = default_jobs();
    repro->add_option("--figure", repro_figure, "Study id: fig2, fig3 or fig4")->required();
    repro->add_option("--out", repro_out, "Output directory root");
    repro->add_flag("--fast", repro_fast, "Fast profile: 10 realizations, reservoir size 300");
    repro->add_option("--jobs", repro_jobs, "Worker thread count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed())
            return cmd_simulate(sim_system, sim_tracked, sim_duration, sim_noise, sim_stride,
                                sim_transient, seed_flag, sim_out);
        if (train->parsed()) return cmd_train(train_config, seed_flag, train_out);
        if (track->parsed()) return cmd_track(track_config, track_tracker, seed_flag, track_out);
        if (calibrate->parsed())
            return cmd_calibrate(cal_config, cal_tracker, cal_mode, seed_flag, cal_out);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_config, seed_flag, sweep_out, sweep_jobs);
        if (hyper_cmd->parsed()) return cmd_hyperopt(hyper_config, seed_flag, hyper_out);
        if (repro->parsed())
            return cmd_reproduce(repro_figure, seed_flag, repro_out, repro_fast, repro_jobs);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const DivergenceError& e) {
        std::cerr << "numeric error: " << e.what() << " (t=" << format_num(e.failure_time())
                  << ")\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
