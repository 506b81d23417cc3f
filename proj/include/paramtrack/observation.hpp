#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "paramtrack/dynamics.hpp"

namespace paramtrack {

/// The measurement function: which state components are observed, the
/// sampling interval, and the measurement-noise level. Noise is additive
/// Gaussian scaled per channel by that channel's empirical std over the
/// series being observed, so sigma_meas is dimensionless.
struct ObservationSpec {
    std::vector<int> mask;        // ordered subset of state indices
    double sampling_interval = 2.5; // multiple of the integration dt
    double sigma_meas = 0.0;
    std::uint64_t seed = 0;

    void validate(int dimension, double dt) const;
    int channels() const { return static_cast<int>(mask.size()); }
};

/// Masked, downsampled (optionally noisy) samples. Row k is the observation
/// at t0 + k * dt.
struct ObservationSeries {
    double t0 = 0.0;
    double dt = 0.0; // sampling interval
    Eigen::MatrixXd samples; // size() x channels

    std::size_t size() const { return static_cast<std::size_t>(samples.rows()); }
    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
};

/// Subsample `traj` every sampling_interval, project onto spec.mask, and add
/// measurement noise when sigma_meas > 0. Sample count is exactly
/// floor(traj.duration() / sampling_interval).
ObservationSeries observe(const Trajectory& traj, const ObservationSpec& spec);

/// All non-empty observation masks for a D-dimensional state, ordered by
/// size then lexicographically (7 masks for D = 3).
std::vector<std::vector<int>> enumerate_masks(int dimension);

std::string mask_label(const std::vector<int>& mask);

void write_csv(const ObservationSeries& series, const std::filesystem::path& path);

} // namespace paramtrack
