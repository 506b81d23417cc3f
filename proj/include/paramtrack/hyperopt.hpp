#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "paramtrack/pipeline.hpp"

namespace paramtrack {

/// Box bounds for the six reservoir tunables. Log-scaled axes are searched
/// in log space and must be strictly positive.
struct SearchSpace {
    struct Axis {
        std::string name;
        double lo = 0.0;
        double hi = 1.0;
        bool log_scale = false;
    };
    std::vector<Axis> axes;

    static SearchSpace reservoir_default();

    void validate() const;
    int dims() const { return static_cast<int>(axes.size()); }
    Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const;
    Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const;
    bool contains(const Eigen::VectorXd& x) const;
};

struct OptRecord {
    Eigen::MatrixXd points; // evaluations x dims, original units
    Eigen::VectorXd values;
    int best_index = -1;
    int budget = 0;

    double best_value() const { return values(best_index); }
    Eigen::VectorXd best_point() const { return points.row(best_index); }
};

enum class OptMode { GpEi, RandomSearch };

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Objective value assigned to divergent or non-finite evaluations.
inline constexpr double kPenaltyObjective = 10.0;

/// Minimize `f` over the space with `budget` evaluations: 10 quasi-random
/// initial points, then expected-improvement steps under a Gaussian-process
/// surrogate (squared-exponential kernel on unit-normalized axes, 1000
/// random candidates per iteration). RandomSearch mode evaluates uniform
/// points under the same interface.
OptRecord optimize(const SearchSpace& space, const Objective& f, int budget,
                   std::uint64_t seed, OptMode mode = OptMode::GpEi);

/// Reservoir hyperparameters for a point in the default search space.
/// Size and washout come from `base`.
ReservoirHyperparams hyper_from_point(const SearchSpace& space, const Eigen::VectorXd& x,
                                      const ReservoirHyperparams& base);

/// Held-out validation waveform: a plain sinusoid with a carrier distinct
/// from the stock test waveforms.
WaveformSpec validation_waveform(const RunConfig& config);

/// Mean validation NRMSE of `hyper` under `config` across n_seeds seeded
/// train/validate runs; divergent or failed runs score kPenaltyObjective.
double tracking_objective(const ReservoirHyperparams& hyper, const RunConfig& config,
                          int n_seeds);

void write_csv(const OptRecord& record, const SearchSpace& space,
               const std::filesystem::path& path);

} // namespace paramtrack
