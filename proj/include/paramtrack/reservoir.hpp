#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "paramtrack/observation.hpp"

namespace paramtrack {

/// The six tunables plus network size and washout. Defaults are a sane
/// starting point; tuned values per experiment live under configs/tuned.
struct ReservoirHyperparams {
    int size = 500;               // D_r
    double spectral_radius = 0.9; // rho
    double input_scaling = 1.0;   // sigma_in
    double leakage = 0.3;         // alpha in (0,1]
    double density = 0.02;        // d in (0,1]
    double bias_scaling = 0.5;    // sigma_b
    double ridge = 1e-6;          // beta_reg
    int washout = 100;

    void validate() const;
};

/// Fixed random network: sparse recurrent weights scaled to the requested
/// spectral radius, dense input weights, one bias channel.
struct ReservoirMatrices {
    Eigen::SparseMatrix<double, Eigen::RowMajor> recurrent; // D_r x D_r
    Eigen::MatrixXd input;  // D_r x channels
    Eigen::VectorXd bias;   // D_r
    std::uint64_t seed = 0;

    int size() const { return static_cast<int>(recurrent.rows()); }
    int channels() const { return static_cast<int>(input.cols()); }
};

/// Per-channel normalization frozen at training time.
struct InputStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;

    static InputStats identity(int channels);
    static InputStats compute(const Eigen::MatrixXd& samples);
};

/// Affine correction applied to the raw readout: o = gain * raw + offset.
struct Calibration {
    double gain = 1.0;
    double offset = 0.0;

    double apply(double raw) const { return gain * raw + offset; }
};

struct TrainedTracker {
    ReservoirMatrices matrices;
    Eigen::RowVectorXd readout; // 1 x (D_r + 1), last entry is the bias weight
    Calibration calib;
    ReservoirHyperparams hyper;
    InputStats input_stats;
    std::vector<int> mask;
    double sampling_interval = 0.0;
    std::string system;
    std::string tracked_param;
};

/// Draw the fixed random network. Recurrent entries are nonzero with
/// probability `density`, uniform on [-1,1], then rescaled so the dominant
/// eigenvalue magnitude (power iteration, 200 iterations) equals
/// spectral_radius. An all-zero draw is retried with a fresh sub-seed,
/// at most 5 times.
ReservoirMatrices init_reservoir(const ReservoirHyperparams& hyper, int channels,
                                 std::uint64_t seed);

/// Dominant-eigenvalue magnitude via power iteration (norm-growth estimate
/// over the trailing half of `iters`). Deterministic given the seed.
double estimate_spectral_radius(const Eigen::SparseMatrix<double, Eigen::RowMajor>& m,
                                int iters, std::uint64_t seed);

/// Leaky-tanh state evolution over a sampled input series:
///   r(k+1) = (1-alpha) r(k) + alpha tanh(W_r r(k) + W_in yhat(k+1) + b),
/// yhat the per-channel normalized input. Returns one state per sample
/// (row k = state after absorbing sample k). The first `hyper.washout`
/// rows are meant for exclusion from any fit.
Eigen::MatrixXd drive(const ReservoirMatrices& matrices, const ReservoirHyperparams& hyper,
                      const ObservationSeries& series, const InputStats& stats,
                      const Eigen::VectorXd& initial_state);

/// Ridge regression of targets on [state; 1] rows past the washout:
///   w = (S^T S + ridge I)^{-1} S^T y.
/// A singular normal matrix at ridge = 0 raises NumericError.
Eigen::RowVectorXd train_readout(const Eigen::MatrixXd& states, const Eigen::VectorXd& targets,
                                 double ridge, int washout);

/// Uncalibrated readout over a series, driven from a zero reservoir state.
Eigen::VectorXd track_raw(const TrainedTracker& tracker, const ObservationSeries& series);

/// Calibrated tracker output o(t), one value per input sample. The caller
/// discards the first washout samples when scoring.
Eigen::VectorXd track(const TrainedTracker& tracker, const ObservationSeries& series);

/// Affine correction through two (true value, raw output mean) pairs.
Calibration calibrate(double p_true_1, double o_mean_1, double p_true_2, double o_mean_2);

/// Offset-only correction (gain pinned to one); used when only a single
/// training level exists.
Calibration calibrate_offset(double p_true, double o_mean);

void save_tracker(const TrainedTracker& tracker, const std::filesystem::path& path);
TrainedTracker load_tracker(const std::filesystem::path& path);

} // namespace paramtrack
