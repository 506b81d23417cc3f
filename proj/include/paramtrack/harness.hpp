#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "paramtrack/pipeline.hpp"

namespace paramtrack {

enum class SweepAxis { Sn, Sw, Mask, SigmaMeas, SigmaDyn, ReservoirSize, TrainDuration, SwitchInterval };

const char* sweep_axis_name(SweepAxis axis);
SweepAxis sweep_axis_from_name(const std::string& name);

/// One point on a sweep axis: numeric for most axes, an index set for Mask.
struct SweepValue {
    double number = 0.0;
    std::vector<int> mask;

    static SweepValue num(double v) { return {v, {}}; }
    static SweepValue of_mask(std::vector<int> m) { return {0.0, std::move(m)}; }
    std::string label(SweepAxis axis) const;
};

struct SweepSpec {
    SweepAxis axis = SweepAxis::Sn;
    std::vector<SweepValue> values;
    int realizations = 50;
    RunConfig base;

    void validate() const;
};

struct RunRow {
    int value_index = 0;
    int realization = 0;
    std::string value_label;
    std::string waveform;
    std::uint64_t seed = 0;
    double rmse = 0.0;
    double nrmse = 0.0;
    bool failed = false;
    std::string error;
};

struct SweepSummaryRow {
    std::string value_label;
    double value_number = 0.0;
    int realizations = 0;
    int failed = 0;
    double mean_rmse = 0.0;
    double std_rmse = 0.0;
    double mean_nrmse = 0.0;
    double std_nrmse = 0.0;
};

struct SweepTable {
    SweepAxis axis = SweepAxis::Sn;
    std::vector<RunRow> rows;
    std::vector<SweepSummaryRow> summary;
};

/// Failed runs never abort a sweep; they are recorded as penalty rows
/// (rmse = nrmse = 10) and counted in the summary.
inline constexpr double kPenaltyRow = 10.0;

using PipelineRunner = std::function<TrackingResult(const RunConfig&)>;

/// Index-parallel worker pool. fn(i) must handle its own per-run failures;
/// escaped exceptions abort the pool and rethrow.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

/// Outcome of scoring one trained tracker on one waveform kind.
struct MultiTrackOutcome {
    double rmse = kPenaltyRow;
    double nrmse = kPenaltyRow;
    bool failed = true;
    std::string error;
};

/// Train a single tracker from `base` and score it on each waveform kind
/// (the training set is waveform-independent given base/amplitude).
std::vector<MultiTrackOutcome> train_and_track_kinds(const RunConfig& base,
                                                     const std::vector<WaveformKind>& kinds);

/// Apply one axis value onto a copy of the base config.
RunConfig apply_sweep_value(const RunConfig& base, SweepAxis axis, const SweepValue& value);

/// Run `realizations` independently seeded train+track pipelines per axis
/// value and aggregate mean/std. `runner` defaults to run_pipeline and is
/// injectable for tests.
SweepTable sweep(const SweepSpec& spec, int jobs, const PipelineRunner& runner = {});

/// Recompute a summary from persisted rows (mean/std identical to sweep()).
std::vector<SweepSummaryRow> summarize_rows(const std::vector<RunRow>& rows,
                                            const std::vector<SweepValue>& values,
                                            SweepAxis axis);

struct SuccessCriterion {
    double threshold = 0.1; // NRMSE bound

    void validate() const;
};

struct SuccessTable {
    std::vector<std::vector<int>> masks;
    std::vector<WaveformKind> waveforms;
    Eigen::MatrixXd p_success; // masks x waveforms
    std::vector<RunRow> rows;  // value_index = mask index
};

/// Success probability per (observation mask, waveform kind): the fraction of
/// realizations whose test NRMSE beats the criterion. One tracker is trained
/// per (mask, realization) and evaluated on all three waveform classes.
SuccessTable success_rate(const RunConfig& base, const SuccessCriterion& criterion,
                          int realizations, int jobs, const PipelineRunner& runner = {});

/// Recompute the success matrix from persisted rows at a given threshold.
Eigen::MatrixXd success_matrix(const SuccessTable& table, double threshold);

struct ReproduceOptions {
    std::uint64_t master_seed = 20240901;
    bool fast = false; // 10 realizations, reservoir size 300
    int jobs = 2;
};

struct Manifest {
    std::filesystem::path directory;
    std::vector<std::pair<std::string, std::string>> entries;
};

/// The figure masks: K -> {R}, y_c -> {R,C}, y_p -> {C,P}.
std::vector<int> canonical_mask_for(const std::string& tracked);

/// The stock panel configs behind the tracking-demo figure:
/// (R | AM on K), (R,C | FM on y_c), (C,P | sawtooth on y_p), sn = 5.
std::vector<RunConfig> canonical_panel_configs(std::uint64_t master_seed, bool fast);

/// Run one of the canned studies end to end and write rows.csv, summary.csv,
/// SVG plots, and manifest.txt under outdir/<figure>/<hash>/.
Manifest reproduce_figure(const std::string& figure, const std::filesystem::path& outdir,
                          const ReproduceOptions& options);

void write_rows_csv(const std::vector<RunRow>& rows, const std::filesystem::path& path);
void write_summary_csv(const std::vector<SweepSummaryRow>& summary,
                       const std::filesystem::path& path);

/// Replace the kind of a waveform, keeping base, amplitude and timescales.
WaveformSpec rekind_waveform(const WaveformSpec& w, WaveformKind kind);

/// Version string recorded in manifests and provenance comments.
extern const char* const kCodeVersion;

} // namespace paramtrack
