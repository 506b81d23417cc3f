#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "paramtrack/waveforms.hpp"

namespace paramtrack {

enum class SystemName { FoodChain, Rossler, MackeyGlass };

const char* system_name_str(SystemName name);
SystemName system_name_from_str(const std::string& name);

/// A benchmark dynamical system: dimension, model constants, and which
/// parameter is being tracked. Factory functions give the stock setups.
struct SystemSpec {
    SystemName name = SystemName::FoodChain;
    int dimension = 3;
    std::map<std::string, double> fixed_params;
    std::string tracked_param;
    double nominal_value = 0.0;
    double dt = 0.01;
    double delay = 0.0; // tau, Mackey-Glass only

    /// Chaotic three-species food chain. Tracked parameter K, y_c or y_p
    /// (nominal 0.94, 1.7, 5.0).
    static SystemSpec food_chain(const std::string& tracked = "K");

    /// Rossler oscillator, (a,b,c) = (0.2, 0.2, 5.7), tracked parameter c.
    static SystemSpec rossler(const std::string& tracked = "c");

    /// Mackey-Glass delay equation, (beta,gamma,n,tau) = (0.2, 0.1, 10, 17),
    /// tracked parameter tau or beta. One observable state; internal history.
    static SystemSpec mackey_glass(const std::string& tracked = "tau");

    void validate() const;
};

/// Uniformly spaced samples of one run. `states` is row-major size() x dimension;
/// `params` holds the tracked-parameter value applied at each recorded instant.
struct Trajectory {
    double t0 = 0.0;
    double dt = 0.0; // spacing between recorded states (integration dt times stride)
    int dimension = 0;
    std::vector<double> states;
    std::vector<double> params;

    std::size_t size() const { return params.size(); }
    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
    double duration() const { return static_cast<double>(size()) * dt; }
    const double* state(std::size_t k) const { return states.data() + k * static_cast<std::size_t>(dimension); }
};

/// Ring buffer of past scalar samples for delay equations. Holds values at
/// t - k*dt for k = 0..capacity-1 (k = 0 newest) and interpolates linearly.
class DelayBuffer {
public:
    explicit DelayBuffer(std::size_t capacity = 0);

    void fill(double value);
    void push(double value);
    void ensure_capacity(std::size_t capacity);
    std::size_t capacity() const { return buf_.size(); }

    /// Value at `steps_back` integration steps in the past (real-valued,
    /// linearly interpolated; exact integer offsets return stored samples).
    double at_offset(double steps_back) const;

    /// Element-wise h = ref + factor*(h - ref). Requires aligned rings
    /// (same capacity and push count), as produced by lockstep integration.
    void rescale_towards(const DelayBuffer& reference, double factor);

private:
    std::vector<double> buf_;
    std::size_t head_ = 0; // index of the newest sample
};

// Right-hand sides, map-keyed surface. Missing keys raise ConfigError;
// non-finite state raises NumericError.
std::array<double, 3> foodchain_deriv(const std::array<double, 3>& state,
                                      const std::map<std::string, double>& params);
std::array<double, 3> rossler_deriv(const std::array<double, 3>& state,
                                    const std::map<std::string, double>& params);
double mackeyglass_deriv(double x_now, double x_delayed,
                         const std::map<std::string, double>& params);

/// Stepwise integrator with persistent state, so a source run can be extended
/// and clocks can be re-zeroed between transient and harvest phases.
class Simulator {
public:
    /// Initial state drawn uniformly from the system's start box.
    Simulator(const SystemSpec& spec, std::uint64_t seed);

    /// Explicit initial state (Mackey-Glass: constant history at x0[0]).
    Simulator(const SystemSpec& spec, const std::vector<double>& x0, std::uint64_t seed);

    /// Integrate for `duration` (a positive multiple of dt), recording every
    /// `record_stride`-th state starting with the current one. The tracked
    /// parameter is read from `signal` at each step's start time and held
    /// constant within the step. sigma_dyn > 0 adds a per-step additive
    /// perturbation sigma_dyn*sqrt(dt)*N(0,1) to every component.
    Trajectory advance(const WaveformSpec& signal, double duration,
                       int record_stride = 1, double sigma_dyn = 0.0);

    /// Advance without recording (attractor transient).
    void run_transient(const WaveformSpec& signal, std::int64_t steps);

    double time() const;
    void set_time(double t);
    const std::vector<double>& state() const { return x_; }
    void set_state(const std::vector<double>& x);

    /// Scale the deviation of this simulator's state (and history, for delay
    /// systems) from `reference` by `factor`. Support for separation-growth
    /// measurements on delay systems.
    void rescale_towards(const Simulator& reference, double factor);

    const SystemSpec& spec() const { return spec_; }

private:
    void init_common();
    template <class Step>
    Trajectory advance_impl(const WaveformSpec& signal, double duration, int record_stride,
                            double sigma_dyn, Step&& step_fn);

    SystemSpec spec_;
    std::vector<double> x_;
    double t_origin_ = 0.0;
    std::int64_t step_count_ = 0;
    std::mt19937_64 noise_rng_;
    DelayBuffer history_; // Mackey-Glass only
};

/// One-shot wrapper around Simulator. No transient is applied; callers wanting
/// on-attractor data run the transient themselves (see Simulator).
Trajectory integrate(const SystemSpec& spec, const std::optional<std::vector<double>>& x0,
                     const WaveformSpec& signal, double duration, std::uint64_t seed,
                     int record_stride = 1, double sigma_dyn = 0.0);

/// Default number of integration steps discarded before harvesting data.
inline constexpr std::int64_t kTransientSteps = 10000;

/// Overflow guard: any |component| above this aborts the run.
inline constexpr double kDivergenceGuard = 1e6;

} // namespace paramtrack
