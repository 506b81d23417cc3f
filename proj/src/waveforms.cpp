#include "paramtrack/waveforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "paramtrack/errors.hpp"
#include "paramtrack/rng.hpp"

namespace paramtrack {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

WaveformSpec WaveformSpec::constant(double value) {
    WaveformSpec w;
    w.kind = WaveformKind::Constant;
    w.base = value;
    return w;
}

WaveformSpec WaveformSpec::fm(double base, double amplitude, double carrier_period,
                              double modulation_period, double depth) {
    WaveformSpec w;
    w.kind = WaveformKind::FM;
    w.base = base;
    w.amplitude = amplitude;
    w.carrier_period = carrier_period;
    w.modulation_period = modulation_period;
    w.depth = depth;
    return w;
}

WaveformSpec WaveformSpec::am(double base, double amplitude, double carrier_period,
                              double modulation_period, double depth) {
    WaveformSpec w = fm(base, amplitude, carrier_period, modulation_period, depth);
    w.kind = WaveformKind::AM;
    return w;
}

WaveformSpec WaveformSpec::sawtooth(double base, double amplitude, double carrier_period) {
    WaveformSpec w;
    w.kind = WaveformKind::Sawtooth;
    w.base = base;
    w.amplitude = amplitude;
    w.carrier_period = carrier_period;
    return w;
}

WaveformSpec WaveformSpec::piecewise(std::vector<std::pair<double, double>> schedule) {
    WaveformSpec w;
    w.kind = WaveformKind::PiecewiseConstant;
    w.schedule = std::move(schedule);
    return w;
}

void WaveformSpec::validate() const {
    switch (kind) {
    case WaveformKind::Constant:
        break;
    case WaveformKind::PiecewiseConstant:
        if (schedule.empty()) throw ConfigError("piecewise waveform: empty schedule");
        for (const auto& [value, duration] : schedule) {
            (void)value;
            if (!(duration > 0.0)) throw ConfigError("piecewise waveform: non-positive segment duration");
        }
        break;
    case WaveformKind::Sawtooth:
        if (!(carrier_period > 0.0)) throw ConfigError("sawtooth waveform: carrier_period must be > 0");
        break;
    case WaveformKind::FM:
    case WaveformKind::AM:
        if (!(carrier_period > 0.0)) throw ConfigError("waveform: carrier_period must be > 0");
        if (!(modulation_period > 0.0)) throw ConfigError("waveform: modulation_period must be > 0");
        if (depth < 0.0 || depth >= 1.0) throw ConfigError("waveform: depth must be in [0,1)");
        break;
    }
}

double WaveformSpec::evaluate(double t) const {
    switch (kind) {
    case WaveformKind::Constant:
        return base;
    case WaveformKind::PiecewiseConstant: {
        if (schedule.empty()) throw ConfigError("piecewise waveform: empty schedule");
        double acc = 0.0;
        for (const auto& [value, duration] : schedule) {
            acc += duration;
            if (t < acc) return value;
        }
        return schedule.back().first; // past the end: hold the last level
    }
    case WaveformKind::FM: {
        double phase = kTwoPi * t / carrier_period +
                       depth * (carrier_period / modulation_period) * std::sin(kTwoPi * t / modulation_period);
        return base + amplitude * std::sin(phase);
    }
    case WaveformKind::AM: {
        double envelope = 1.0 + depth * std::sin(kTwoPi * t / modulation_period);
        return base + amplitude * envelope * std::sin(kTwoPi * t / carrier_period);
    }
    case WaveformKind::Sawtooth: {
        double cycles = t / carrier_period;
        double frac = cycles - std::floor(cycles);
        return base + amplitude * (2.0 * frac - 1.0);
    }
    }
    throw ConfigError("waveform: unknown kind");
}

double WaveformSpec::min_value() const {
    switch (kind) {
    case WaveformKind::Constant:
        return base;
    case WaveformKind::PiecewiseConstant: {
        double lo = schedule.front().first;
        for (const auto& [value, duration] : schedule) {
            (void)duration;
            lo = std::min(lo, value);
        }
        return lo;
    }
    case WaveformKind::FM:
    case WaveformKind::Sawtooth:
        return base - std::abs(amplitude);
    case WaveformKind::AM:
        return base - std::abs(amplitude) * (1.0 + depth);
    }
    throw ConfigError("waveform: unknown kind");
}

double WaveformSpec::max_value() const {
    switch (kind) {
    case WaveformKind::Constant:
        return base;
    case WaveformKind::PiecewiseConstant: {
        double hi = schedule.front().first;
        for (const auto& [value, duration] : schedule) {
            (void)duration;
            hi = std::max(hi, value);
        }
        return hi;
    }
    case WaveformKind::FM:
    case WaveformKind::Sawtooth:
        return base + std::abs(amplitude);
    case WaveformKind::AM:
        return base + std::abs(amplitude) * (1.0 + depth);
    }
    throw ConfigError("waveform: unknown kind");
}

double WaveformSpec::total_duration() const {
    double acc = 0.0;
    for (const auto& [value, duration] : schedule) {
        (void)value;
        acc += duration;
    }
    return acc;
}

const char* waveform_kind_name(WaveformKind kind) {
    switch (kind) {
    case WaveformKind::Constant: return "constant";
    case WaveformKind::PiecewiseConstant: return "piecewise";
    case WaveformKind::FM: return "fm";
    case WaveformKind::AM: return "am";
    case WaveformKind::Sawtooth: return "sawtooth";
    }
    return "unknown";
}

WaveformKind waveform_kind_from_name(const std::string& name) {
    if (name == "constant") return WaveformKind::Constant;
    if (name == "piecewise") return WaveformKind::PiecewiseConstant;
    if (name == "fm") return WaveformKind::FM;
    if (name == "am") return WaveformKind::AM;
    if (name == "sawtooth") return WaveformKind::Sawtooth;
    throw ConfigError("unknown waveform kind '" + name + "'");
}

std::vector<double> training_values(double base, double amplitude, int sn, double sw) {
    if (sn < 1) throw ConfigError("training_values: sn must be >= 1");
    if (!(sw > 0.0)) throw ConfigError("training_values: sw must be > 0");
    if (sn == 1) return {base};
    double half = sw * amplitude;
    std::vector<double> values(sn);
    for (int i = 0; i < sn; ++i) {
        double u = static_cast<double>(i) / (sn - 1); // 0..1
        values[i] = base - half + 2.0 * half * u;
    }
    return values;
}

WaveformSpec training_schedule(const std::vector<double>& values, double switch_interval,
                               double total_duration, Ordering ordering, std::uint64_t seed) {
    if (values.empty()) throw ConfigError("training_schedule: empty value list");
    if (!(switch_interval > 0.0)) throw ConfigError("training_schedule: switch_interval must be > 0");
    double n_real = total_duration / switch_interval;
    auto n_seg = static_cast<std::size_t>(std::llround(n_real));
    if (n_seg == 0 || std::abs(n_real - static_cast<double>(n_seg)) > 1e-9)
        throw ConfigError("training_schedule: total_duration must be a positive multiple of switch_interval");

    std::vector<std::pair<double, double>> schedule;
    schedule.reserve(n_seg);
    if (ordering == Ordering::Cyclic) {
        for (std::size_t k = 0; k < n_seg; ++k)
            schedule.emplace_back(values[k % values.size()], switch_interval);
    } else {
        auto rng = make_rng(mix_seed(seed, "schedule-order"));
        std::vector<double> block(values);
        std::size_t pos = block.size(); // force a shuffle on first use
        for (std::size_t k = 0; k < n_seg; ++k) {
            if (pos == block.size()) {
                std::shuffle(block.begin(), block.end(), rng);
                pos = 0;
            }
            schedule.emplace_back(block[pos++], switch_interval);
        }
    }
    return WaveformSpec::piecewise(std::move(schedule));
}

} // namespace paramtrack
