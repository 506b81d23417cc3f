#include "paramtrack/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "paramtrack/csv.hpp"
#include "paramtrack/errors.hpp"
#include "paramtrack/rng.hpp"

namespace paramtrack {

namespace {

std::int64_t exact_ratio(double num, double den, const char* what) {
    double r = num / den;
    auto n = std::llround(r);
    if (n < 1 || std::abs(r - static_cast<double>(n)) > 1e-9 * std::max(1.0, std::abs(r)))
        throw ConfigError(std::string(what) + " must be a positive integer multiple");
    return n;
}

/// Base value and half-range of the test waveform, used to place the
/// training levels.
std::pair<double, double> waveform_center_span(const WaveformSpec& w) {
    if (w.kind == WaveformKind::Constant || w.kind == WaveformKind::PiecewiseConstant) {
        double lo = w.min_value(), hi = w.max_value();
        return {0.5 * (lo + hi), 0.5 * (hi - lo)};
    }
    return {w.base, std::abs(w.amplitude)};
}

struct CalibrationRun {
    double level;
    double output_mean;
};

CalibrationRun run_calibration_level(const RunConfig& config, const TrainedTracker& tracker,
                                     double level, std::uint64_t sub) {
    // 200 scored samples after a fresh washout, at a constant parameter.
    constexpr int kCalibSamples = 200;
    const int washout = config.hyper.washout;
    const auto stride = static_cast<int>(
        exact_ratio(config.observation.sampling_interval, config.system.dt,
                    "sampling_interval / dt"));
    WaveformSpec constant = WaveformSpec::constant(level);

    Simulator sim(config.system, mix_seed(config.seed, "calibration-run", {sub}));
    sim.run_transient(constant, kTransientSteps);
    sim.set_time(0.0);
    double duration = (washout + kCalibSamples) * config.observation.sampling_interval;
    Trajectory traj = sim.advance(constant, duration, stride, config.sigma_dyn);

    ObservationSpec ospec = config.observation;
    ospec.seed = mix_seed(config.seed, "calibration-observe", {sub});
    ObservationSeries series = observe(traj, ospec);

    Eigen::VectorXd raw = track_raw(tracker, series);
    double mean = raw.tail(raw.size() - washout).mean();
    return {level, mean};
}

} // namespace

const char* calibration_mode_name(CalibrationMode mode) {
    switch (mode) {
    case CalibrationMode::Affine: return "affine";
    case CalibrationMode::Offset: return "offset";
    case CalibrationMode::None: return "none";
    }
    return "unknown";
}

CalibrationMode calibration_mode_from_name(const std::string& name) {
    if (name == "affine") return CalibrationMode::Affine;
    if (name == "offset") return CalibrationMode::Offset;
    if (name == "none") return CalibrationMode::None;
    throw ConfigError("unknown calibration mode '" + name + "'");
}

void RunConfig::validate() const {
    system.validate();
    observation.validate(system.dimension, system.dt);
    hyper.validate();
    test_waveform.validate();
    if (sn < 1) throw ConfigError("config: sn must be >= 1");
    if (!(sw > 0.0 && sw <= 1.0)) throw ConfigError("config: sw must be in (0,1]");
    if (!(switch_interval > 0.0)) throw ConfigError("config: switch_interval must be > 0");
    exact_ratio(switch_interval, observation.sampling_interval,
                "switch_interval / sampling_interval");
    exact_ratio(train_duration, switch_interval, "train_duration / switch_interval");
    if (test_duration < train_duration)
        throw ConfigError("config: test_duration must be >= train_duration");
    exact_ratio(test_duration, observation.sampling_interval,
                "test_duration / sampling_interval");
    if (sigma_dyn < 0.0) throw ConfigError("config: dynamical_noise must be >= 0");
    auto [center, span] = training_range();
    (void)center;
    if (sn > 1 && !(span > 0.0))
        throw ConfigError("config: training range has zero span but sn > 1 "
                          "(set training.center/span or use a varying test waveform)");
}

std::pair<double, double> RunConfig::training_range() const {
    auto derived = waveform_center_span(test_waveform);
    double center = train_center.value_or(derived.first);
    double span = train_span.value_or(derived.second);
    return {center, span};
}

int RunConfig::segments() const {
    return static_cast<int>(exact_ratio(train_duration, switch_interval,
                                        "train_duration / switch_interval"));
}

int RunConfig::samples_per_segment() const {
    return static_cast<int>(exact_ratio(switch_interval, observation.sampling_interval,
                                        "switch_interval / sampling_interval"));
}

RunConfig default_run_config(SystemName system, const std::string& tracked,
                             const std::vector<int>& mask, WaveformKind waveform) {
    RunConfig c;
    switch (system) {
    case SystemName::FoodChain:
        c.system = SystemSpec::food_chain(tracked);
        c.observation.sampling_interval = 2.5;
        c.switch_interval = 62.5;
        break;
    case SystemName::Rossler:
        c.system = SystemSpec::rossler(tracked);
        c.observation.sampling_interval = 0.25;
        c.switch_interval = 6.25;
        break;
    case SystemName::MackeyGlass:
        c.system = SystemSpec::mackey_glass(tracked);
        c.observation.sampling_interval = 2.0;
        c.switch_interval = 50.0;
        break;
    }
    c.observation.mask = mask;
    c.train_duration = 900.0 * c.switch_interval;
    c.test_duration = 1000.0 * c.switch_interval;

    double base = c.system.nominal_value;
    double amplitude = 0.1 * base;
    double carrier = 250.0 * c.switch_interval;
    double modulation = 4.0 * carrier;
    switch (waveform) {
    case WaveformKind::Constant:
        c.test_waveform = WaveformSpec::constant(base);
        break;
    case WaveformKind::FM:
        c.test_waveform = WaveformSpec::fm(base, amplitude, carrier, modulation, 0.5);
        break;
    case WaveformKind::AM:
        c.test_waveform = WaveformSpec::am(base, amplitude, carrier, modulation, 0.5);
        break;
    case WaveformKind::Sawtooth:
        c.test_waveform = WaveformSpec::sawtooth(base, amplitude, carrier);
        break;
    case WaveformKind::PiecewiseConstant:
        throw ConfigError("default_run_config: piecewise test waveform needs an explicit schedule");
    }
    return c;
}

TrainingSet build_training_set(const RunConfig& config) {
    config.validate();
    const int n_seg = config.segments();
    const int seg_samples = config.samples_per_segment();
    const auto stride = static_cast<int>(
        exact_ratio(config.observation.sampling_interval, config.system.dt,
                    "sampling_interval / dt"));

    auto [center, span] = config.training_range();
    std::vector<double> levels =
        config.sn == 1 ? std::vector<double>{center}
                       : training_values(center, span, config.sn, config.sw);

    std::uint64_t order_seed = config.schedule_seed
                                   ? *config.schedule_seed
                                   : mix_seed(config.seed, "schedule");
    WaveformSpec schedule = training_schedule(levels, config.switch_interval,
                                              config.train_duration, config.ordering,
                                              order_seed);

    // Count how many segments each level feeds, then harvest one long
    // post-transient run per level and cut it sequentially.
    std::vector<int> seg_count(levels.size(), 0);
    std::vector<std::size_t> level_of_segment(schedule.schedule.size());
    for (std::size_t s = 0; s < schedule.schedule.size(); ++s) {
        double v = schedule.schedule[s].first;
        auto it = std::find(levels.begin(), levels.end(), v);
        if (it == levels.end()) throw NumericError("schedule level missing from level set");
        auto idx = static_cast<std::size_t>(it - levels.begin());
        level_of_segment[s] = idx;
        ++seg_count[idx];
    }

    std::vector<ObservationSeries> sources(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (seg_count[i] == 0) continue;
        WaveformSpec constant = WaveformSpec::constant(levels[i]);
        Simulator sim(config.system, mix_seed(config.seed, "train-source", {i}));
        sim.run_transient(constant, kTransientSteps);
        sim.set_time(0.0);
        double duration = static_cast<double>(seg_count[i]) * config.switch_interval;
        Trajectory traj = sim.advance(constant, duration, stride, config.sigma_dyn);
        ObservationSpec ospec = config.observation;
        ospec.seed = mix_seed(config.seed, "train-observe", {i});
        sources[i] = observe(traj, ospec);
    }

    TrainingSet ts;
    ts.samples_per_segment = seg_samples;
    ts.inputs.t0 = 0.0;
    ts.inputs.dt = config.observation.sampling_interval;
    ts.inputs.samples.resize(static_cast<Eigen::Index>(n_seg) * seg_samples,
                             config.observation.channels());
    ts.targets.resize(static_cast<Eigen::Index>(n_seg) * seg_samples);
    ts.segment_levels.reserve(level_of_segment.size());

    std::vector<Eigen::Index> cursor(levels.size(), 0);
    Eigen::Index row = 0;
    for (std::size_t s = 0; s < level_of_segment.size(); ++s) {
        std::size_t idx = level_of_segment[s];
        double level = levels[idx];
        ts.segment_levels.push_back(level);
        ts.inputs.samples.middleRows(row, seg_samples) =
            sources[idx].samples.middleRows(cursor[idx], seg_samples);
        ts.targets.segment(row, seg_samples).setConstant(level);
        cursor[idx] += seg_samples;
        row += seg_samples;
    }
    return ts;
}

Calibration run_calibration(const RunConfig& config, const TrainedTracker& tracker) {
    auto [center, span] = config.training_range();
    std::vector<double> levels =
        config.sn == 1 ? std::vector<double>{center}
                       : training_values(center, span, config.sn, config.sw);
    auto [lo, hi] = std::minmax_element(levels.begin(), levels.end());
    const double level_lo = *lo, level_hi = *hi;

    switch (config.calibration) {
    case CalibrationMode::None:
        return Calibration{};
    case CalibrationMode::Affine: {
        CalibrationRun a = run_calibration_level(config, tracker, level_lo, 0);
        if (level_hi > level_lo) {
            CalibrationRun b = run_calibration_level(config, tracker, level_hi, 1);
            return calibrate(a.level, a.output_mean, b.level, b.output_mean);
        }
        return calibrate_offset(a.level, a.output_mean);
    }
    case CalibrationMode::Offset: {
        CalibrationRun a = run_calibration_level(config, tracker, level_lo, 0);
        if (level_hi > level_lo) {
            CalibrationRun b = run_calibration_level(config, tracker, level_hi, 1);
            return calibrate_offset(0.5 * (a.level + b.level),
                                    0.5 * (a.output_mean + b.output_mean));
        }
        return calibrate_offset(a.level, a.output_mean);
    }
    }
    throw ConfigError("unknown calibration mode");
}

TrainedTracker train_tracker(const RunConfig& config) {
    TrainingSet ts = build_training_set(config);

    TrainedTracker tracker;
    tracker.hyper = config.hyper;
    tracker.mask = config.observation.mask;
    tracker.sampling_interval = config.observation.sampling_interval;
    tracker.system = system_name_str(config.system.name);
    tracker.tracked_param = config.system.tracked_param;
    tracker.input_stats = InputStats::compute(ts.inputs.samples);
    tracker.matrices = init_reservoir(config.hyper, config.observation.channels(),
                                      mix_seed(config.seed, "reservoir"));

    auto rng = make_rng(mix_seed(config.seed, "reservoir-initial-state"));
    Eigen::VectorXd r0(config.hyper.size);
    for (int i = 0; i < config.hyper.size; ++i) r0(i) = uniform(rng, -1.0, 1.0);

    Eigen::MatrixXd states = drive(tracker.matrices, tracker.hyper, ts.inputs,
                                   tracker.input_stats, r0);
    tracker.readout = train_readout(states, ts.targets, config.hyper.ridge,
                                    config.hyper.washout);
    tracker.calib = run_calibration(config, tracker);
    return tracker;
}

TrackingResult run_tracking(const RunConfig& config, const TrainedTracker& tracker) {
    config.validate();
    if (tracker.mask != config.observation.mask)
        throw ConfigError("run_tracking: tracker mask differs from config mask");
    if (std::abs(tracker.sampling_interval - config.observation.sampling_interval) >
        1e-12 * std::max(1.0, tracker.sampling_interval))
        throw ConfigError("run_tracking: tracker sampling interval differs from config");

    const auto stride = static_cast<int>(
        exact_ratio(config.observation.sampling_interval, config.system.dt,
                    "sampling_interval / dt"));

    Simulator sim(config.system, mix_seed(config.seed, "test-run"));
    WaveformSpec settle = WaveformSpec::constant(config.test_waveform.evaluate(0.0));
    sim.run_transient(settle, kTransientSteps);
    sim.set_time(0.0);
    Trajectory traj = sim.advance(config.test_waveform, config.test_duration, stride,
                                  config.sigma_dyn);

    ObservationSpec ospec = config.observation;
    ospec.seed = mix_seed(config.seed, "test-observe");
    ObservationSeries series = observe(traj, ospec);

    TrackingResult result;
    result.seed = config.seed;
    result.fingerprint = fingerprint(config);
    result.washout = config.hyper.washout;
    result.tracked = track(tracker, series);
    const auto n = static_cast<Eigen::Index>(series.size());
    result.truth.resize(n);
    result.times.resize(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        result.times[static_cast<std::size_t>(k)] = series.time(static_cast<std::size_t>(k));
        result.truth(k) = config.test_waveform.evaluate(series.time(static_cast<std::size_t>(k)));
    }

    if (n <= result.washout)
        throw ConfigError("run_tracking: test series not longer than washout");
    const auto scored = n - result.washout;
    Eigen::VectorXd t_scored = result.truth.tail(scored);
    Eigen::VectorXd o_scored = result.tracked.tail(scored);
    result.rmse = rmse(o_scored, t_scored);
    double ptp = t_scored.maxCoeff() - t_scored.minCoeff();
    if (ptp > 0.0)
        result.nrmse = result.rmse / ptp;
    else
        result.nrmse = result.rmse == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return result;
}

TrackingResult run_pipeline(const RunConfig& config) {
    TrainedTracker tracker = train_tracker(config);
    return run_tracking(config, tracker);
}

double rmse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw ConfigError("rmse: series length mismatch");
    if (a.size() == 0) throw ConfigError("rmse: empty series");
    return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

std::string describe(const RunConfig& config) {
    std::ostringstream out;
    out << "system " << system_name_str(config.system.name) << '\n';
    out << "tracked " << config.system.tracked_param << '\n';
    out << "dt " << format_exact(config.system.dt) << '\n';
    for (const auto& [k, v] : config.system.fixed_params)
        out << "param " << k << ' ' << format_exact(v) << '\n';
    out << "mask";
    for (int m : config.observation.mask) out << ' ' << m;
    out << '\n';
    out << "sampling_interval " << format_exact(config.observation.sampling_interval) << '\n';
    out << "sigma_meas " << format_exact(config.observation.sigma_meas) << '\n';
    const auto& h = config.hyper;
    out << "reservoir " << h.size << ' ' << format_exact(h.spectral_radius) << ' '
        << format_exact(h.input_scaling) << ' ' << format_exact(h.leakage) << ' '
        << format_exact(h.density) << ' ' << format_exact(h.bias_scaling) << ' '
        << format_exact(h.ridge) << ' ' << h.washout << '\n';
    out << "sn " << config.sn << '\n';
    out << "sw " << format_exact(config.sw) << '\n';
    auto [train_center_v, train_span_v] = config.training_range();
    out << "train_range " << format_exact(train_center_v) << ' '
        << format_exact(train_span_v) << '\n';
    out << "switch_interval " << format_exact(config.switch_interval) << '\n';
    out << "train_duration " << format_exact(config.train_duration) << '\n';
    out << "test_duration " << format_exact(config.test_duration) << '\n';
    out << "waveform " << waveform_kind_name(config.test_waveform.kind) << ' '
        << format_exact(config.test_waveform.base) << ' '
        << format_exact(config.test_waveform.amplitude) << ' '
        << format_exact(config.test_waveform.carrier_period) << ' '
        << format_exact(config.test_waveform.modulation_period) << ' '
        << format_exact(config.test_waveform.depth) << '\n';
    for (const auto& [v, d] : config.test_waveform.schedule)
        out << "segment " << format_exact(v) << ' ' << format_exact(d) << '\n';
    out << "ordering " << (config.ordering == Ordering::Cyclic ? "cyclic" : "random") << '\n';
    if (config.schedule_seed) out << "schedule_seed " << *config.schedule_seed << '\n';
    out << "calibration " << calibration_mode_name(config.calibration) << '\n';
    out << "sigma_dyn " << format_exact(config.sigma_dyn) << '\n';
    out << "seed " << config.seed << '\n';
    return out.str();
}

std::uint64_t fingerprint(const RunConfig& config) {
    return hash_tag(describe(config));
}

void write_csv(const TrackingResult& result, const std::filesystem::path& path) {
    CsvWriter csv(path, {"t", "p_true", "o_tracked"});
    for (std::size_t k = 0; k < result.times.size(); ++k)
        csv.row({result.times[k], result.truth(static_cast<Eigen::Index>(k)),
                 result.tracked(static_cast<Eigen::Index>(k))});
}

} // namespace paramtrack
