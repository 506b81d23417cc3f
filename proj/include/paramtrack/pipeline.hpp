#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "paramtrack/dynamics.hpp"
#include "paramtrack/observation.hpp"
#include "paramtrack/reservoir.hpp"
#include "paramtrack/waveforms.hpp"

namespace paramtrack {

enum class CalibrationMode { Affine, Offset, None };

/// Seed used when neither a flag, the environment, nor the config names one.
inline constexpr std::uint64_t kDefaultSeed = 20240901;

const char* calibration_mode_name(CalibrationMode mode);
CalibrationMode calibration_mode_from_name(const std::string& name);

/// Everything one train-and-track experiment needs. `seed` drives every
/// random draw in the run through derived sub-seeds.
struct RunConfig {
    SystemSpec system;
    ObservationSpec observation;
    ReservoirHyperparams hyper;
    int sn = 5;                    // number of training parameter levels
    double sw = 1.0;               // relative range of training levels
    std::optional<double> train_center; // level placement; default: test waveform base
    std::optional<double> train_span;   // half-range; default: test waveform amplitude
    double switch_interval = 62.5; // segment length in model time
    double train_duration = 900.0 * 62.5;
    WaveformSpec test_waveform;
    double test_duration = 1000.0 * 62.5;
    Ordering ordering = Ordering::Random;
    std::optional<std::uint64_t> schedule_seed; // isolate segment-order randomness
    CalibrationMode calibration = CalibrationMode::Affine;
    double sigma_dyn = 0.0;
    std::uint64_t seed = kDefaultSeed;

    void validate() const;
    int segments() const;
    int samples_per_segment() const;

    /// Center and half-range the training levels are placed on.
    std::pair<double, double> training_range() const;
};

/// Stock configuration for a (system, tracked parameter, mask, waveform)
/// combination: per-system sampling and switching intervals, default test
/// waveform timescales, and tuned reservoir hyperparameters.
RunConfig default_run_config(SystemName system, const std::string& tracked,
                             const std::vector<int>& mask, WaveformKind waveform);

/// The recombined training input: segments of constant-parameter source runs
/// concatenated into one series, with the generating level as target.
struct TrainingSet {
    ObservationSeries inputs;
    Eigen::VectorXd targets;            // one per sample
    std::vector<double> segment_levels; // one per segment
    int samples_per_segment = 0;
};

TrainingSet build_training_set(const RunConfig& config);

/// Correction for an existing tracker from fresh constant-parameter runs at
/// the extreme training levels (affine when two distinct levels exist,
/// offset-only otherwise or when the config says so).
Calibration run_calibration(const RunConfig& config, const TrainedTracker& tracker);

TrainedTracker train_tracker(const RunConfig& config);

struct TrackingResult {
    std::vector<double> times;
    Eigen::VectorXd truth;   // p(t) at sample instants
    Eigen::VectorXd tracked; // o(t)
    int washout = 0;         // leading samples excluded from the scores
    double rmse = 0.0;
    double nrmse = 0.0; // rmse / peak-to-peak of post-washout truth
    std::uint64_t fingerprint = 0;
    std::uint64_t seed = 0;
};

/// Integrate the system under the test waveform, observe, track, score.
TrackingResult run_tracking(const RunConfig& config, const TrainedTracker& tracker);

/// train_tracker followed by run_tracking.
TrackingResult run_pipeline(const RunConfig& config);

double rmse(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Canonical text rendering of a config; basis of the fingerprint.
std::string describe(const RunConfig& config);
std::uint64_t fingerprint(const RunConfig& config);

/// Columns t, p_true, o_tracked.
void write_csv(const TrackingResult& result, const std::filesystem::path& path);

} // namespace paramtrack
