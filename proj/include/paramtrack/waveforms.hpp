#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace paramtrack {

enum class WaveformKind { Constant, PiecewiseConstant, FM, AM, Sawtooth };

enum class Ordering { Cyclic, Random };

/// A deterministic parameter-vs-time signal. Closed forms:
///   FM:       base + amplitude * sin(2*pi*t/T_c + depth*(T_c/T_m)*sin(2*pi*t/T_m))
///   AM:       base + amplitude * (1 + depth*sin(2*pi*t/T_m)) * sin(2*pi*t/T_c)
///   Sawtooth: base + amplitude * (2*frac(t/T_c) - 1)
struct WaveformSpec {
    WaveformKind kind = WaveformKind::Constant;
    double base = 0.0;             // nominal parameter value
    double amplitude = 0.0;        // A
    double carrier_period = 0.0;   // T_c
    double modulation_period = 0.0; // T_m
    double depth = 0.0;            // m in [0,1)
    std::vector<std::pair<double, double>> schedule; // (value, duration), PiecewiseConstant

    static WaveformSpec constant(double value);
    static WaveformSpec fm(double base, double amplitude, double carrier_period,
                           double modulation_period, double depth);
    static WaveformSpec am(double base, double amplitude, double carrier_period,
                           double modulation_period, double depth);
    static WaveformSpec sawtooth(double base, double amplitude, double carrier_period);
    static WaveformSpec piecewise(std::vector<std::pair<double, double>> schedule);

    /// Throws ConfigError if a field required by `kind` is unset or invalid.
    void validate() const;

    double evaluate(double t) const;

    /// Tight bounds on evaluate() over t >= 0.
    double min_value() const;
    double max_value() const;

    double total_duration() const; // schedule only; 0 otherwise
};

const char* waveform_kind_name(WaveformKind kind);
WaveformKind waveform_kind_from_name(const std::string& name);

/// s_n values equally spaced on [base - sw*amplitude, base + sw*amplitude];
/// a single value collapses to {base}.
std::vector<double> training_values(double base, double amplitude, int sn, double sw);

/// Piecewise-constant schedule of total_duration/switch_interval segments,
/// each switch_interval long, filled from `values` by the ordering rule.
/// Random ordering shuffles whole blocks of the value set, so every value
/// appears once per block.
WaveformSpec training_schedule(const std::vector<double>& values, double switch_interval,
                               double total_duration, Ordering ordering, std::uint64_t seed);

} // namespace paramtrack
