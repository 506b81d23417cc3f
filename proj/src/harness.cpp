#include "paramtrack/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "paramtrack/csv.hpp"
#include "paramtrack/errors.hpp"
#include "paramtrack/plot.hpp"
#include "paramtrack/rng.hpp"

namespace paramtrack {

const char* const kCodeVersion = "paramtrack 1.0.0";

namespace {

const WaveformKind kWaveformOrder[] = {WaveformKind::FM, WaveformKind::Sawtooth,
                                       WaveformKind::AM};

} // namespace

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) {
        workers.emplace_back([&, t] {
            try {
                while (true) {
                    int i = next.fetch_add(1);
                    if (i >= n) break;
                    fn(i);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
                next.store(n);
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

namespace {

TrackingResult default_runner(const RunConfig& config) { return run_pipeline(config); }

double column_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double column_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

std::filesystem::path experiment_dir(const std::filesystem::path& outdir,
                                     const std::string& figure,
                                     const ReproduceOptions& options) {
    std::uint64_t h = mix_seed(options.master_seed, figure,
                               {options.fast ? 1ULL : 0ULL, hash_tag(kCodeVersion)});
    return outdir / figure / hex16(h);
}

void write_manifest(const Manifest& manifest, const ReproduceOptions& options,
                    const std::string& figure) {
    std::ofstream out(manifest.directory / "manifest.txt");
    out << "figure " << figure << '\n';
    out << "code_version " << kCodeVersion << '\n';
    out << "master_seed " << options.master_seed << '\n';
    out << "profile " << (options.fast ? "fast" : "full") << '\n';
    for (const auto& [key, value] : manifest.entries) out << key << ' ' << value << '\n';
}

} // namespace

std::vector<MultiTrackOutcome> train_and_track_kinds(const RunConfig& base,
                                                     const std::vector<WaveformKind>& kinds) {
    std::vector<MultiTrackOutcome> out(kinds.size());
    TrainedTracker tracker;
    try {
        tracker = train_tracker(base);
    } catch (const std::exception& e) {
        for (auto& row : out) row.error = e.what();
        return out;
    }
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        try {
            RunConfig cfg = base;
            cfg.test_waveform = rekind_waveform(base.test_waveform, kinds[i]);
            TrackingResult r = run_tracking(cfg, tracker);
            out[i] = {r.rmse, r.nrmse, false, ""};
        } catch (const std::exception& e) {
            out[i].error = e.what();
        }
    }
    return out;
}

const char* sweep_axis_name(SweepAxis axis) {
    switch (axis) {
    case SweepAxis::Sn: return "sn";
    case SweepAxis::Sw: return "sw";
    case SweepAxis::Mask: return "mask";
    case SweepAxis::SigmaMeas: return "measurement_noise";
    case SweepAxis::SigmaDyn: return "dynamical_noise";
    case SweepAxis::ReservoirSize: return "reservoir_size";
    case SweepAxis::TrainDuration: return "train_duration";
    case SweepAxis::SwitchInterval: return "switch_interval";
    }
    return "unknown";
}

SweepAxis sweep_axis_from_name(const std::string& name) {
    for (SweepAxis axis : {SweepAxis::Sn, SweepAxis::Sw, SweepAxis::Mask, SweepAxis::SigmaMeas,
                           SweepAxis::SigmaDyn, SweepAxis::ReservoirSize,
                           SweepAxis::TrainDuration, SweepAxis::SwitchInterval})
        if (name == sweep_axis_name(axis)) return axis;
    throw ConfigError("unknown sweep axis '" + name + "'");
}

std::string SweepValue::label(SweepAxis axis) const {
    if (axis == SweepAxis::Mask) return mask_label(mask);
    return format_num(number);
}

void SweepSpec::validate() const {
    if (values.empty()) throw ConfigError("sweep: values must be non-empty");
    if (realizations < 1) throw ConfigError("sweep: realizations must be >= 1");
    base.validate();
    for (const auto& v : values)
        apply_sweep_value(base, axis, v).validate();
}

RunConfig apply_sweep_value(const RunConfig& base, SweepAxis axis, const SweepValue& value) {
    RunConfig cfg = base;
    switch (axis) {
    case SweepAxis::Sn:
        cfg.sn = static_cast<int>(std::llround(value.number));
        break;
    case SweepAxis::Sw:
        cfg.sw = value.number;
        break;
    case SweepAxis::Mask:
        cfg.observation.mask = value.mask;
        break;
    case SweepAxis::SigmaMeas:
        cfg.observation.sigma_meas = value.number;
        break;
    case SweepAxis::SigmaDyn:
        cfg.sigma_dyn = value.number;
        break;
    case SweepAxis::ReservoirSize:
        cfg.hyper.size = static_cast<int>(std::llround(value.number));
        break;
    case SweepAxis::TrainDuration:
        cfg.train_duration = value.number;
        cfg.test_duration = std::max(cfg.test_duration, cfg.train_duration);
        break;
    case SweepAxis::SwitchInterval: {
        // Keep the segment structure: train/test lengths scale with the interval.
        double train_segments = base.train_duration / base.switch_interval;
        double test_ratio = base.test_duration / base.switch_interval;
        cfg.switch_interval = value.number;
        cfg.train_duration = train_segments * value.number;
        cfg.test_duration = test_ratio * value.number;
        break;
    }
    }
    return cfg;
}

SweepTable sweep(const SweepSpec& spec, int jobs, const PipelineRunner& runner) {
    spec.validate();
    const PipelineRunner& run = runner ? runner : default_runner;

    const int n_values = static_cast<int>(spec.values.size());
    const int total = n_values * spec.realizations;

    SweepTable table;
    table.axis = spec.axis;
    table.rows.resize(static_cast<std::size_t>(total));

    parallel_for(total, jobs, [&](int i) {
        const int value_index = i / spec.realizations;
        const int realization = i % spec.realizations;
        RunConfig cfg = apply_sweep_value(spec.base, spec.axis, spec.values[value_index]);
        cfg.seed = mix_seed(spec.base.seed, "sweep",
                            {static_cast<std::uint64_t>(value_index),
                             static_cast<std::uint64_t>(realization)});
        RunRow row;
        row.value_index = value_index;
        row.realization = realization;
        row.value_label = spec.values[value_index].label(spec.axis);
        row.waveform = waveform_kind_name(cfg.test_waveform.kind);
        row.seed = cfg.seed;
        try {
            TrackingResult r = run(cfg);
            row.rmse = r.rmse;
            row.nrmse = r.nrmse;
            row.failed = false;
            if (!std::isfinite(row.rmse) || !std::isfinite(row.nrmse)) {
                row.rmse = kPenaltyRow;
                row.nrmse = kPenaltyRow;
                row.failed = true;
                row.error = "non-finite score";
            }
        } catch (const std::exception& e) {
            row.rmse = kPenaltyRow;
            row.nrmse = kPenaltyRow;
            row.failed = true;
            row.error = e.what();
        }
        table.rows[static_cast<std::size_t>(i)] = std::move(row);
    });

    table.summary = summarize_rows(table.rows, spec.values, spec.axis);
    return table;
}

std::vector<SweepSummaryRow> summarize_rows(const std::vector<RunRow>& rows,
                                            const std::vector<SweepValue>& values,
                                            SweepAxis axis) {
    std::vector<SweepSummaryRow> summary(values.size());
    for (std::size_t v = 0; v < values.size(); ++v) {
        std::vector<double> rmses, nrmses;
        int failed = 0;
        for (const auto& row : rows) {
            if (row.value_index != static_cast<int>(v)) continue;
            rmses.push_back(row.rmse);
            nrmses.push_back(row.nrmse);
            if (row.failed) ++failed;
        }
        SweepSummaryRow& s = summary[v];
        s.value_label = values[v].label(axis);
        s.value_number = values[v].number;
        s.realizations = static_cast<int>(rmses.size());
        s.failed = failed;
        s.mean_rmse = column_mean(rmses);
        s.std_rmse = column_std(rmses, s.mean_rmse);
        s.mean_nrmse = column_mean(nrmses);
        s.std_nrmse = column_std(nrmses, s.mean_nrmse);
    }
    return summary;
}

void SuccessCriterion::validate() const {
    if (!(threshold > 0.0)) throw ConfigError("success criterion: threshold must be > 0");
}

SuccessTable success_rate(const RunConfig& base, const SuccessCriterion& criterion,
                          int realizations, int jobs, const PipelineRunner& runner) {
    criterion.validate();
    if (realizations < 1) throw ConfigError("success_rate: realizations must be >= 1");
    base.validate();

    SuccessTable table;
    table.masks = enumerate_masks(base.system.dimension);
    table.waveforms.assign(std::begin(kWaveformOrder), std::end(kWaveformOrder));

    const int n_masks = static_cast<int>(table.masks.size());
    const int n_wf = static_cast<int>(table.waveforms.size());
    const int total = n_masks * realizations;
    table.rows.resize(static_cast<std::size_t>(total) * n_wf);

    parallel_for(total, jobs, [&](int i) {
        const int mask_index = i / realizations;
        const int realization = i % realizations;
        RunConfig cfg = base;
        cfg.observation.mask = table.masks[static_cast<std::size_t>(mask_index)];
        cfg.seed = mix_seed(base.seed, "success-rate",
                            {static_cast<std::uint64_t>(mask_index),
                             static_cast<std::uint64_t>(realization)});

        std::vector<MultiTrackOutcome> outcomes;
        if (runner) {
            outcomes.resize(static_cast<std::size_t>(n_wf));
            for (int w = 0; w < n_wf; ++w) {
                try {
                    RunConfig wf_cfg = cfg;
                    wf_cfg.test_waveform =
                        rekind_waveform(base.test_waveform, table.waveforms[w]);
                    TrackingResult r = runner(wf_cfg);
                    outcomes[w] = {r.rmse, r.nrmse, false, ""};
                } catch (const std::exception& e) {
                    outcomes[w].error = e.what();
                }
            }
        } else {
            outcomes = train_and_track_kinds(cfg, table.waveforms);
        }

        for (int w = 0; w < n_wf; ++w) {
            RunRow row;
            row.value_index = mask_index;
            row.realization = realization;
            row.value_label = mask_label(cfg.observation.mask);
            row.waveform = waveform_kind_name(table.waveforms[w]);
            row.seed = cfg.seed;
            row.rmse = outcomes[w].rmse;
            row.nrmse = outcomes[w].nrmse;
            row.failed = outcomes[w].failed;
            row.error = outcomes[w].error;
            table.rows[static_cast<std::size_t>(i) * n_wf + w] = std::move(row);
        }
    });

    table.p_success = success_matrix(table, criterion.threshold);
    return table;
}

Eigen::MatrixXd success_matrix(const SuccessTable& table, double threshold) {
    const auto n_masks = static_cast<Eigen::Index>(table.masks.size());
    const auto n_wf = static_cast<Eigen::Index>(table.waveforms.size());
    Eigen::MatrixXd hits = Eigen::MatrixXd::Zero(n_masks, n_wf);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n_masks, n_wf);
    for (const auto& row : table.rows) {
        Eigen::Index m = row.value_index;
        Eigen::Index w = 0;
        for (; w < n_wf; ++w)
            if (row.waveform == waveform_kind_name(table.waveforms[w])) break;
        if (w == n_wf) continue;
        counts(m, w) += 1.0;
        if (!row.failed && row.nrmse < threshold) hits(m, w) += 1.0;
    }
    return (hits.array() / counts.array().max(1.0)).matrix();
}

WaveformSpec rekind_waveform(const WaveformSpec& w, WaveformKind kind) {
    if (w.kind == WaveformKind::Constant || w.kind == WaveformKind::PiecewiseConstant)
        throw ConfigError("rekind_waveform: need a periodic waveform as template");
    double carrier = w.carrier_period;
    double modulation = w.modulation_period > 0.0 ? w.modulation_period : 4.0 * carrier;
    double depth = (w.kind == WaveformKind::FM || w.kind == WaveformKind::AM) ? w.depth : 0.5;
    switch (kind) {
    case WaveformKind::FM:
        return WaveformSpec::fm(w.base, w.amplitude, carrier, modulation, depth);
    case WaveformKind::AM:
        return WaveformSpec::am(w.base, w.amplitude, carrier, modulation, depth);
    case WaveformKind::Sawtooth:
        return WaveformSpec::sawtooth(w.base, w.amplitude, carrier);
    case WaveformKind::Constant:
        return WaveformSpec::constant(w.base);
    case WaveformKind::PiecewiseConstant:
        break;
    }
    throw ConfigError("rekind_waveform: unsupported target kind");
}

std::vector<int> canonical_mask_for(const std::string& tracked) {
    if (tracked == "K") return {0};
    if (tracked == "y_c") return {0, 1};
    if (tracked == "y_p") return {1, 2};
    return {0};
}

std::vector<RunConfig> canonical_panel_configs(std::uint64_t master_seed, bool fast) {
    struct Panel {
        const char* tracked;
        WaveformKind kind;
    };
    const Panel panels[] = {{"K", WaveformKind::AM},
                            {"y_c", WaveformKind::FM},
                            {"y_p", WaveformKind::Sawtooth}};
    std::vector<RunConfig> configs;
    for (std::size_t i = 0; i < std::size(panels); ++i) {
        RunConfig cfg = default_run_config(SystemName::FoodChain, panels[i].tracked,
                                           canonical_mask_for(panels[i].tracked),
                                           panels[i].kind);
        cfg.sn = 5;
        cfg.sw = 1.0;
        if (fast) cfg.hyper.size = 300;
        cfg.seed = mix_seed(master_seed, "panel", {i});
        configs.push_back(std::move(cfg));
    }
    return configs;
}

void write_rows_csv(const std::vector<RunRow>& rows, const std::filesystem::path& path) {
    CsvWriter csv(path, {"value", "waveform", "realization", "seed", "rmse", "nrmse",
                         "failed", "error"});
    for (const auto& r : rows)
        csv.row({r.value_label, r.waveform, std::to_string(r.realization),
                 std::to_string(r.seed), format_num(r.rmse), format_num(r.nrmse),
                 r.failed ? "1" : "0", r.error});
}

void write_summary_csv(const std::vector<SweepSummaryRow>& summary,
                       const std::filesystem::path& path) {
    CsvWriter csv(path, {"value", "realizations", "failed", "mean_rmse", "std_rmse",
                         "mean_nrmse", "std_nrmse"});
    for (const auto& s : summary)
        csv.row({s.value_label, std::to_string(s.realizations), std::to_string(s.failed),
                 format_num(s.mean_rmse), format_num(s.std_rmse), format_num(s.mean_nrmse),
                 format_num(s.std_nrmse)});
}

namespace {

Manifest reproduce_fig2(const std::filesystem::path& dir, const ReproduceOptions& options) {
    Manifest manifest;
    manifest.directory = dir;
    auto configs = canonical_panel_configs(options.master_seed, options.fast);
    CsvWriter summary(dir / "summary.csv", {"panel", "tracked", "waveform", "rmse", "nrmse"});
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const RunConfig& cfg = configs[i];
        std::string label = cfg.system.tracked_param + "_" +
                            waveform_kind_name(cfg.test_waveform.kind);
        try {
            TrackingResult result = run_pipeline(cfg);
            write_csv(result, dir / ("track_" + label + ".csv"));

            PlotTable table;
            table.title = "Tracked " + cfg.system.tracked_param + " (" +
                          waveform_kind_name(cfg.test_waveform.kind) + ", observing " +
                          mask_label(cfg.observation.mask) + ")";
            table.x_label = "time";
            table.y_label = cfg.system.tracked_param;
            table.provenance = std::string(kCodeVersion) + " config " +
                               hex16(result.fingerprint) + " seed " + std::to_string(cfg.seed);
            PlotSeries truth{"ground truth", {}, {}, {}};
            PlotSeries tracked{"tracked", {}, {}, {}};
            std::size_t stride = std::max<std::size_t>(1, result.times.size() / 2500);
            for (std::size_t k = 0; k < result.times.size(); k += stride) {
                truth.x.push_back(result.times[k]);
                truth.y.push_back(result.truth(static_cast<Eigen::Index>(k)));
                tracked.x.push_back(result.times[k]);
                tracked.y.push_back(result.tracked(static_cast<Eigen::Index>(k)));
            }
            table.series = {truth, tracked};
            render_plot(table, PlotKind::Overlay, dir / ("overlay_" + label + ".svg"));

            summary.row({std::to_string(i), cfg.system.tracked_param,
                         waveform_kind_name(cfg.test_waveform.kind), format_num(result.rmse),
                         format_num(result.nrmse)});
            manifest.entries.emplace_back("panel_" + label, "ok");
        } catch (const std::exception& e) {
            manifest.entries.emplace_back("panel_" + label, std::string("failed: ") + e.what());
        }
    }
    return manifest;
}

struct GridRow {
    std::string parameter;
    std::string axis;
    double value = 0.0;
    std::string waveform;
    int realization = 0;
    std::uint64_t seed = 0;
    double rmse = kPenaltyRow;
    double nrmse = kPenaltyRow;
    bool failed = true;
    std::string error;
};

Manifest reproduce_fig3(const std::filesystem::path& dir, const ReproduceOptions& options) {
    Manifest manifest;
    manifest.directory = dir;
    const int realizations = options.fast ? 10 : 50;
    const char* params[] = {"K", "y_c", "y_p"};
    const std::vector<double> sn_values{1, 2, 3, 5, 8};
    const std::vector<double> sw_values{1.0, 0.6, 0.3, 0.2, 0.1};
    const std::vector<WaveformKind> kinds(std::begin(kWaveformOrder), std::end(kWaveformOrder));

    struct Job {
        int param;
        int axis; // 0 = sn, 1 = sw
        int value;
        int realization;
    };
    std::vector<Job> jobs_list;
    for (int p = 0; p < 3; ++p)
        for (int a = 0; a < 2; ++a) {
            const auto& vals = a == 0 ? sn_values : sw_values;
            for (int v = 0; v < static_cast<int>(vals.size()); ++v)
                for (int r = 0; r < realizations; ++r) jobs_list.push_back({p, a, v, r});
        }

    std::vector<std::vector<GridRow>> results(jobs_list.size());
    parallel_for(static_cast<int>(jobs_list.size()), options.jobs, [&](int i) {
        const Job& job = jobs_list[static_cast<std::size_t>(i)];
        const auto& vals = job.axis == 0 ? sn_values : sw_values;
        double value = vals[static_cast<std::size_t>(job.value)];

        RunConfig cfg = default_run_config(SystemName::FoodChain, params[job.param],
                                           canonical_mask_for(params[job.param]),
                                           WaveformKind::FM);
        if (options.fast) cfg.hyper.size = 300;
        if (job.axis == 0)
            cfg.sn = static_cast<int>(std::llround(value));
        else
            cfg.sw = value;
        cfg.seed = mix_seed(options.master_seed, "fig3",
                            {static_cast<std::uint64_t>(job.param),
                             static_cast<std::uint64_t>(job.axis),
                             static_cast<std::uint64_t>(job.value),
                             static_cast<std::uint64_t>(job.realization)});

        auto outcomes = train_and_track_kinds(cfg, kinds);
        std::vector<GridRow> rows(kinds.size());
        for (std::size_t w = 0; w < kinds.size(); ++w) {
            GridRow& row = rows[w];
            row.parameter = params[job.param];
            row.axis = job.axis == 0 ? "sn" : "sw";
            row.value = value;
            row.waveform = waveform_kind_name(kinds[w]);
            row.realization = job.realization;
            row.seed = cfg.seed;
            row.rmse = outcomes[w].rmse;
            row.nrmse = outcomes[w].nrmse;
            row.failed = outcomes[w].failed;
            row.error = outcomes[w].error;
        }
        results[static_cast<std::size_t>(i)] = std::move(rows);
    });

    CsvWriter rows_csv(dir / "rows.csv", {"parameter", "axis", "value", "waveform",
                                          "realization", "seed", "rmse", "nrmse", "failed",
                                          "error"});
    for (const auto& rows : results)
        for (const auto& r : rows)
            rows_csv.row({r.parameter, r.axis, format_num(r.value), r.waveform,
                          std::to_string(r.realization), std::to_string(r.seed),
                          format_num(r.rmse), format_num(r.nrmse), r.failed ? "1" : "0",
                          r.error});

    CsvWriter summary_csv(dir / "summary.csv",
                          {"parameter", "axis", "value", "waveform", "realizations",
                           "failed", "mean_rmse", "std_rmse", "mean_nrmse", "std_nrmse"});
    for (int p = 0; p < 3; ++p) {
        for (int a = 0; a < 2; ++a) {
            const auto& vals = a == 0 ? sn_values : sw_values;
            PlotTable plot;
            plot.title = std::string("Tracking error vs ") + (a == 0 ? "sn" : "sw") +
                         " for " + params[p];
            plot.x_label = a == 0 ? "training levels sn" : "training range fraction sw";
            plot.y_label = "mean test RMSE";
            plot.provenance = std::string(kCodeVersion) + " seed " +
                              std::to_string(options.master_seed);
            for (const auto kind : kinds) {
                PlotSeries series{waveform_kind_name(kind), {}, {}, {}};
                for (double value : vals) {
                    std::vector<double> rmses;
                    int failed = 0;
                    std::vector<double> nrmses;
                    for (const auto& rows : results)
                        for (const auto& r : rows) {
                            if (r.parameter != params[p] ||
                                r.axis != (a == 0 ? "sn" : "sw") || r.value != value ||
                                r.waveform != waveform_kind_name(kind))
                                continue;
                            rmses.push_back(r.rmse);
                            nrmses.push_back(r.nrmse);
                            if (r.failed) ++failed;
                        }
                    double mean = column_mean(rmses);
                    double sd = column_std(rmses, mean);
                    double mean_n = column_mean(nrmses);
                    double sd_n = column_std(nrmses, mean_n);
                    summary_csv.row({params[p], a == 0 ? "sn" : "sw", format_num(value),
                                     waveform_kind_name(kind),
                                     std::to_string(rmses.size()), std::to_string(failed),
                                     format_num(mean), format_num(sd), format_num(mean_n),
                                     format_num(sd_n)});
                    series.x.push_back(value);
                    series.y.push_back(mean);
                    series.yerr.push_back(sd);
                }
                plot.series.push_back(std::move(series));
            }
            std::string name = std::string("sweep_") + (a == 0 ? "sn" : "sw") + "_" + params[p];
            try {
                render_plot(plot, PlotKind::Line, dir / (name + ".svg"));
                manifest.entries.emplace_back(name, "ok");
            } catch (const std::exception& e) {
                manifest.entries.emplace_back(name, std::string("failed: ") + e.what());
            }
        }
    }
    return manifest;
}

Manifest reproduce_fig4(const std::filesystem::path& dir, const ReproduceOptions& options) {
    Manifest manifest;
    manifest.directory = dir;
    const int realizations = options.fast ? 10 : 50;
    const char* params[] = {"K", "y_c", "y_p"};
    SuccessCriterion criterion;

    CsvWriter rows_csv(dir / "rows.csv", {"parameter", "mask", "waveform", "realization",
                                          "seed", "rmse", "nrmse", "failed", "error"});
    CsvWriter summary_csv(dir / "summary.csv",
                          {"parameter", "mask", "waveform", "p_success", "realizations"});
    for (int p = 0; p < 3; ++p) {
        RunConfig base = default_run_config(SystemName::FoodChain, params[p],
                                            canonical_mask_for(params[p]), WaveformKind::FM);
        if (options.fast) base.hyper.size = 300;
        base.sn = 5;
        base.sw = 1.0;
        base.seed = mix_seed(options.master_seed, "fig4", {static_cast<std::uint64_t>(p)});
        try {
            SuccessTable table = success_rate(base, criterion, realizations, options.jobs);
            for (const auto& r : table.rows)
                rows_csv.row({params[p], r.value_label, r.waveform,
                              std::to_string(r.realization), std::to_string(r.seed),
                              format_num(r.rmse), format_num(r.nrmse), r.failed ? "1" : "0",
                              r.error});
            PlotTable plot;
            plot.title = std::string("Success rate per observation subset, parameter ") +
                         params[p];
            plot.y_label = "success probability";
            plot.provenance = std::string(kCodeVersion) + " seed " +
                              std::to_string(options.master_seed);
            for (const auto& mask : table.masks) plot.groups.push_back(mask_label(mask));
            for (auto kind : table.waveforms)
                plot.bar_series.emplace_back(waveform_kind_name(kind));
            plot.bar_values = table.p_success;
            for (std::size_t m = 0; m < table.masks.size(); ++m)
                for (std::size_t w = 0; w < table.waveforms.size(); ++w)
                    summary_csv.row({params[p], mask_label(table.masks[m]),
                                     waveform_kind_name(table.waveforms[w]),
                                     format_num(table.p_success(
                                         static_cast<Eigen::Index>(m),
                                         static_cast<Eigen::Index>(w))),
                                     std::to_string(realizations)});
            std::string name = std::string("success_") + params[p];
            render_plot(plot, PlotKind::Bar, dir / (name + ".svg"));
            manifest.entries.emplace_back(name, "ok");
        } catch (const std::exception& e) {
            manifest.entries.emplace_back(std::string("success_") + params[p],
                                          std::string("failed: ") + e.what());
        }
    }
    return manifest;
}

} // namespace

Manifest reproduce_figure(const std::string& figure, const std::filesystem::path& outdir,
                          const ReproduceOptions& options) {
    std::filesystem::path dir = experiment_dir(outdir, figure, options);
    std::filesystem::create_directories(dir);

    Manifest manifest;
    if (figure == "fig2")
        manifest = reproduce_fig2(dir, options);
    else if (figure == "fig3")
        manifest = reproduce_fig3(dir, options);
    else if (figure == "fig4")
        manifest = reproduce_fig4(dir, options);
    else
        throw ConfigError("unknown figure '" + figure + "' (expected fig2, fig3 or fig4)");

    write_manifest(manifest, options, figure);
    return manifest;
}

} // namespace paramtrack
