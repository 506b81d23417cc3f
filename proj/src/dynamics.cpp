#include "paramtrack/dynamics.hpp"

#include <cmath>
#include <cstdlib>

#include "paramtrack/errors.hpp"
#include "paramtrack/rk4.hpp"
#include "paramtrack/rng.hpp"

namespace paramtrack {

namespace {

double require_param(const std::map<std::string, double>& params, const char* name) {
    auto it = params.find(name);
    if (it == params.end())
        throw ConfigError(std::string("missing system parameter '") + name + "'");
    return it->second;
}

struct FoodChainParams {
    double K, x_c, y_c, x_p, y_p, R_0, C_0;

    static FoodChainParams from_map(const std::map<std::string, double>& m) {
        FoodChainParams p{};
        p.K = require_param(m, "K");
        p.x_c = require_param(m, "x_c");
        p.y_c = require_param(m, "y_c");
        p.x_p = require_param(m, "x_p");
        p.y_p = require_param(m, "y_p");
        p.R_0 = require_param(m, "R_0");
        p.C_0 = require_param(m, "C_0");
        for (double v : {p.K, p.x_c, p.y_c, p.x_p, p.y_p, p.R_0, p.C_0})
            if (!(v > 0.0)) throw ConfigError("food-chain constants must be strictly positive");
        return p;
    }
};

struct RosslerParams {
    double a, b, c;

    static RosslerParams from_map(const std::map<std::string, double>& m) {
        return {require_param(m, "a"), require_param(m, "b"), require_param(m, "c")};
    }
};

struct MackeyGlassParams {
    double beta, gamma, n, tau;

    static MackeyGlassParams from_map(const std::map<std::string, double>& m) {
        MackeyGlassParams p{require_param(m, "beta"), require_param(m, "gamma"),
                            require_param(m, "n"), require_param(m, "tau")};
        if (!(p.n > 0.0)) throw ConfigError("mackey-glass: n must be > 0");
        if (p.gamma < 0.0) throw ConfigError("mackey-glass: gamma must be >= 0");
        return p;
    }
};

inline std::array<double, 3> foodchain_rhs(const std::array<double, 3>& s, const FoodChainParams& p) {
    const double R = s[0], C = s[1], P = s[2];
    const double fr = R / (R + p.R_0); // resource functional response
    const double fc = C / (C + p.C_0); // consumer functional response
    return {
        R * (1.0 - R / p.K) - p.x_c * p.y_c * C * fr,
        p.x_c * C * (p.y_c * fr - 1.0) - p.x_p * p.y_p * P * fc,
        p.x_p * P * (p.y_p * fc - 1.0),
    };
}

inline std::array<double, 3> rossler_rhs(const std::array<double, 3>& s, const RosslerParams& p) {
    return {-s[1] - s[2], s[0] + p.a * s[1], p.b + s[2] * (s[0] - p.c)};
}

// x^n with a fast path for small integer exponents (the stock n = 10).
inline double pow_n(double x, double n) {
    double r = std::round(n);
    if (r == n && r > 0.0 && r <= 64.0) {
        double acc = 1.0, base = x;
        auto e = static_cast<unsigned>(r);
        while (e) {
            if (e & 1u) acc *= base;
            base *= base;
            e >>= 1u;
        }
        return acc;
    }
    return std::pow(x, n);
}

inline double mackeyglass_rhs(double x_now, double x_delayed, const MackeyGlassParams& p) {
    return p.beta * x_delayed / (1.0 + pow_n(x_delayed, p.n)) - p.gamma * x_now;
}

template <std::size_t N>
void check_finite(const std::array<double, N>& s) {
    for (double v : s)
        if (!std::isfinite(v)) throw NumericError("non-finite state passed to derivative");
}

double FoodChainParams::* foodchain_member(const std::string& name) {
    if (name == "K") return &FoodChainParams::K;
    if (name == "x_c") return &FoodChainParams::x_c;
    if (name == "y_c") return &FoodChainParams::y_c;
    if (name == "x_p") return &FoodChainParams::x_p;
    if (name == "y_p") return &FoodChainParams::y_p;
    if (name == "R_0") return &FoodChainParams::R_0;
    if (name == "C_0") return &FoodChainParams::C_0;
    throw ConfigError("food chain has no parameter '" + name + "'");
}

double RosslerParams::* rossler_member(const std::string& name) {
    if (name == "a") return &RosslerParams::a;
    if (name == "b") return &RosslerParams::b;
    if (name == "c") return &RosslerParams::c;
    throw ConfigError("rossler has no parameter '" + name + "'");
}

double MackeyGlassParams::* mackeyglass_member(const std::string& name) {
    if (name == "beta") return &MackeyGlassParams::beta;
    if (name == "gamma") return &MackeyGlassParams::gamma;
    if (name == "n") return &MackeyGlassParams::n;
    if (name == "tau") return &MackeyGlassParams::tau;
    throw ConfigError("mackey-glass has no parameter '" + name + "'");
}

/// Piecewise-constant lookup with a monotone cursor; other kinds delegate.
class SignalCursor {
public:
    explicit SignalCursor(const WaveformSpec& w) : w_(w) {}

    double operator()(double t) {
        if (w_.kind != WaveformKind::PiecewiseConstant) return w_.evaluate(t);
        const auto& sched = w_.schedule;
        while (idx_ < sched.size() && t >= cum_ + sched[idx_].second) {
            cum_ += sched[idx_].second;
            ++idx_;
        }
        return idx_ < sched.size() ? sched[idx_].first : sched.back().first;
    }

private:
    const WaveformSpec& w_;
    std::size_t idx_ = 0;
    double cum_ = 0.0;
};

std::int64_t steps_for_duration(double duration, double dt) {
    double n_real = duration / dt;
    auto n = static_cast<std::int64_t>(std::llround(n_real));
    double tol = 1e-9 * std::max(1.0, std::abs(n_real));
    if (n <= 0 || std::abs(n_real - static_cast<double>(n)) > tol)
        throw ConfigError("duration must be a positive multiple of dt");
    return n;
}

} // namespace

const char* system_name_str(SystemName name) {
    switch (name) {
    case SystemName::FoodChain: return "foodchain";
    case SystemName::Rossler: return "rossler";
    case SystemName::MackeyGlass: return "mackeyglass";
    }
    return "unknown";
}

SystemName system_name_from_str(const std::string& name) {
    if (name == "foodchain") return SystemName::FoodChain;
    if (name == "rossler") return SystemName::Rossler;
    if (name == "mackeyglass") return SystemName::MackeyGlass;
    throw ConfigError("unknown system '" + name + "'");
}

SystemSpec SystemSpec::food_chain(const std::string& tracked) {
    SystemSpec s;
    s.name = SystemName::FoodChain;
    s.dimension = 3;
    s.fixed_params = {{"K", 0.94}, {"x_c", 0.4}, {"y_c", 1.7}, {"x_p", 0.08},
                      {"y_p", 5.0}, {"R_0", 0.16129}, {"C_0", 0.5}};
    s.tracked_param = tracked;
    s.nominal_value = require_param(s.fixed_params, tracked.c_str());
    s.dt = 0.01;
    return s;
}

SystemSpec SystemSpec::rossler(const std::string& tracked) {
    SystemSpec s;
    s.name = SystemName::Rossler;
    s.dimension = 3;
    s.fixed_params = {{"a", 0.2}, {"b", 0.2}, {"c", 5.7}};
    s.tracked_param = tracked;
    s.nominal_value = require_param(s.fixed_params, tracked.c_str());
    s.dt = 0.01;
    return s;
}

SystemSpec SystemSpec::mackey_glass(const std::string& tracked) {
    SystemSpec s;
    s.name = SystemName::MackeyGlass;
    s.dimension = 1;
    s.fixed_params = {{"beta", 0.2}, {"gamma", 0.1}, {"n", 10.0}, {"tau", 17.0}};
    s.tracked_param = tracked;
    s.nominal_value = require_param(s.fixed_params, tracked.c_str());
    s.dt = 0.01;
    s.delay = 17.0;
    return s;
}

void SystemSpec::validate() const {
    if (!(dt > 0.0)) throw ConfigError("system: dt must be > 0");
    switch (name) {
    case SystemName::FoodChain: {
        if (dimension != 3) throw ConfigError("food chain: dimension must be 3");
        auto p = FoodChainParams::from_map(fixed_params);
        (void)p;
        foodchain_member(tracked_param);
        break;
    }
    case SystemName::Rossler: {
        if (dimension != 3) throw ConfigError("rossler: dimension must be 3");
        auto p = RosslerParams::from_map(fixed_params);
        (void)p;
        rossler_member(tracked_param);
        break;
    }
    case SystemName::MackeyGlass: {
        if (dimension != 1) throw ConfigError("mackey-glass: dimension must be 1");
        auto p = MackeyGlassParams::from_map(fixed_params);
        mackeyglass_member(tracked_param);
        if (!(p.tau >= dt)) throw ConfigError("mackey-glass: tau must be >= dt");
        if (std::abs(delay - p.tau) > 1e-12)
            throw ConfigError("mackey-glass: spec.delay must equal fixed_params[tau]");
        break;
    }
    }
}

std::array<double, 3> foodchain_deriv(const std::array<double, 3>& state,
                                      const std::map<std::string, double>& params) {
    check_finite(state);
    return foodchain_rhs(state, FoodChainParams::from_map(params));
}

std::array<double, 3> rossler_deriv(const std::array<double, 3>& state,
                                    const std::map<std::string, double>& params) {
    check_finite(state);
    return rossler_rhs(state, RosslerParams::from_map(params));
}

double mackeyglass_deriv(double x_now, double x_delayed,
                         const std::map<std::string, double>& params) {
    check_finite(std::array<double, 2>{x_now, x_delayed});
    return mackeyglass_rhs(x_now, x_delayed, MackeyGlassParams::from_map(params));
}

DelayBuffer::DelayBuffer(std::size_t capacity) : buf_(capacity, 0.0) {}

void DelayBuffer::fill(double value) {
    std::fill(buf_.begin(), buf_.end(), value);
    head_ = 0;
}

void DelayBuffer::push(double value) {
    head_ = (head_ + 1) % buf_.size();
    buf_[head_] = value;
}

void DelayBuffer::ensure_capacity(std::size_t capacity) {
    if (capacity <= buf_.size()) return;
    std::vector<double> grown(capacity);
    // Oldest available sample is replicated into the extra slots.
    for (std::size_t k = 0; k < capacity; ++k) {
        std::size_t back = std::min(k, buf_.size() - 1);
        grown[capacity - 1 - k] = buf_[(head_ + buf_.size() - back) % buf_.size()];
    }
    buf_ = std::move(grown);
    head_ = buf_.size() - 1;
}

double DelayBuffer::at_offset(double steps_back) const {
    if (steps_back < 0.0) throw NumericError("delay lookup ahead of current time");
    auto k = static_cast<std::size_t>(steps_back);
    double frac = steps_back - static_cast<double>(k);
    // Snap to grid so exact-multiple delays return stored samples untouched.
    if (frac < 1e-9) frac = 0.0;
    else if (frac > 1.0 - 1e-9) { frac = 0.0; ++k; }
    if (k + (frac > 0.0 ? 1 : 0) >= buf_.size())
        throw NumericError("delay lookup outside history buffer");
    const double newer = buf_[(head_ + buf_.size() - k) % buf_.size()];
    if (frac == 0.0) return newer;
    const double older = buf_[(head_ + buf_.size() - k - 1) % buf_.size()];
    return (1.0 - frac) * newer + frac * older;
}

void DelayBuffer::rescale_towards(const DelayBuffer& reference, double factor) {
    if (buf_.size() != reference.buf_.size() || head_ != reference.head_)
        throw NumericError("delay histories are not aligned");
    for (std::size_t i = 0; i < buf_.size(); ++i)
        buf_[i] = reference.buf_[i] + factor * (buf_[i] - reference.buf_[i]);
}

Simulator::Simulator(const SystemSpec& spec, std::uint64_t seed) : spec_(spec) {
    spec_.validate();
    auto rng = make_rng(mix_seed(seed, "initial-state"));
    switch (spec_.name) {
    case SystemName::FoodChain:
        x_ = {uniform(rng, 0.1, 1.0), uniform(rng, 0.1, 1.0), uniform(rng, 0.1, 1.0)};
        break;
    case SystemName::Rossler:
        x_ = {uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)};
        break;
    case SystemName::MackeyGlass:
        x_ = {uniform(rng, 0.5, 1.5)};
        break;
    }
    noise_rng_ = make_rng(mix_seed(seed, "dynamical-noise"));
    init_common();
}

Simulator::Simulator(const SystemSpec& spec, const std::vector<double>& x0, std::uint64_t seed)
    : spec_(spec), x_(x0) {
    spec_.validate();
    if (x_.size() != static_cast<std::size_t>(spec_.dimension))
        throw ConfigError("initial state dimension mismatch");
    for (double v : x_)
        if (!std::isfinite(v)) throw NumericError("non-finite initial state");
    noise_rng_ = make_rng(mix_seed(seed, "dynamical-noise"));
    init_common();
}

void Simulator::init_common() {
    if (spec_.name == SystemName::MackeyGlass) {
        auto steps = static_cast<std::size_t>(std::ceil(spec_.delay / spec_.dt));
        history_ = DelayBuffer(steps + 2);
        history_.fill(x_[0]);
    }
}

double Simulator::time() const {
    return t_origin_ + static_cast<double>(step_count_) * spec_.dt;
}

void Simulator::set_time(double t) {
    t_origin_ = t;
    step_count_ = 0;
}

void Simulator::set_state(const std::vector<double>& x) {
    if (x.size() != x_.size()) throw ConfigError("state dimension mismatch");
    x_ = x;
    if (spec_.name == SystemName::MackeyGlass) history_.fill(x_[0]);
}

void Simulator::rescale_towards(const Simulator& reference, double factor) {
    if (reference.x_.size() != x_.size()) throw ConfigError("state dimension mismatch");
    for (std::size_t i = 0; i < x_.size(); ++i)
        x_[i] = reference.x_[i] + factor * (x_[i] - reference.x_[i]);
    if (spec_.name == SystemName::MackeyGlass)
        history_.rescale_towards(reference.history_, factor);
}

template <class Step>
Trajectory Simulator::advance_impl(const WaveformSpec& signal, double duration, int record_stride,
                                   double sigma_dyn, Step&& step_fn) {
    if (record_stride < 1) throw ConfigError("record_stride must be >= 1");
    if (sigma_dyn < 0.0) throw ConfigError("sigma_dyn must be >= 0");
    const double dt = spec_.dt;
    const std::int64_t n = steps_for_duration(duration, dt);
    const std::int64_t max_records = n / record_stride;

    Trajectory traj;
    traj.t0 = time();
    traj.dt = dt * record_stride;
    traj.dimension = spec_.dimension;
    traj.states.reserve(static_cast<std::size_t>(max_records) * x_.size());
    traj.params.reserve(static_cast<std::size_t>(max_records));

    SignalCursor cursor(signal);
    const double noise_scale = sigma_dyn * std::sqrt(dt);
    const bool is_delay = spec_.name == SystemName::MackeyGlass;
    // Population-type states live on [0, inf); additive noise must not push
    // them outside their invariant domain or the off-attractor dynamics blow up.
    const bool nonnegative = spec_.name != SystemName::Rossler;

    for (std::int64_t k = 0; k < n; ++k) {
        const double t = t_origin_ + static_cast<double>(step_count_) * dt;
        const double p = cursor(t);
        if (k % record_stride == 0 &&
            static_cast<std::int64_t>(traj.params.size()) < max_records) {
            traj.states.insert(traj.states.end(), x_.begin(), x_.end());
            traj.params.push_back(p);
        }
        step_fn(x_, p);
        if (noise_scale > 0.0)
            for (double& v : x_) {
                v += noise_scale * standard_normal(noise_rng_);
                if (nonnegative && v < 0.0) v = 0.0;
            }
        ++step_count_;
        for (double v : x_) {
            if (!std::isfinite(v) || std::abs(v) > kDivergenceGuard)
                throw DivergenceError(t + dt, "trajectory diverged at t=" + std::to_string(t + dt));
        }
        if (is_delay) history_.push(x_[0]);
    }
    return traj;
}

Trajectory Simulator::advance(const WaveformSpec& signal, double duration,
                              int record_stride, double sigma_dyn) {
    signal.validate();
    const double dt = spec_.dt;
    switch (spec_.name) {
    case SystemName::FoodChain: {
        FoodChainParams base = FoodChainParams::from_map(spec_.fixed_params);
        auto tracked = foodchain_member(spec_.tracked_param);
        return advance_impl(signal, duration, record_stride, sigma_dyn,
                            [&, base, tracked](std::vector<double>& x, double p) {
                                FoodChainParams q = base;
                                q.*tracked = p;
                                std::array<double, 3> s{x[0], x[1], x[2]};
                                s = rk4_step<3>(s, dt, [&q](const std::array<double, 3>& v, double) {
                                    return foodchain_rhs(v, q);
                                });
                                x.assign(s.begin(), s.end());
                            });
    }
    case SystemName::Rossler: {
        RosslerParams base = RosslerParams::from_map(spec_.fixed_params);
        auto tracked = rossler_member(spec_.tracked_param);
        return advance_impl(signal, duration, record_stride, sigma_dyn,
                            [&, base, tracked](std::vector<double>& x, double p) {
                                RosslerParams q = base;
                                q.*tracked = p;
                                std::array<double, 3> s{x[0], x[1], x[2]};
                                s = rk4_step<3>(s, dt, [&q](const std::array<double, 3>& v, double) {
                                    return rossler_rhs(v, q);
                                });
                                x.assign(s.begin(), s.end());
                            });
    }
    case SystemName::MackeyGlass: {
        MackeyGlassParams base = MackeyGlassParams::from_map(spec_.fixed_params);
        auto tracked = mackeyglass_member(spec_.tracked_param);
        const bool tau_varies = spec_.tracked_param == "tau";
        if (tau_varies) {
            if (signal.min_value() < dt)
                throw ConfigError("mackey-glass: tracked tau dips below dt");
            history_.ensure_capacity(
                static_cast<std::size_t>(std::ceil(signal.max_value() / dt)) + 2);
        }
        return advance_impl(signal, duration, record_stride, sigma_dyn,
                            [&, base, tracked](std::vector<double>& x, double p) {
                                MackeyGlassParams q = base;
                                q.*tracked = p;
                                const double delay_steps = q.tau / dt;
                                std::array<double, 1> s{x[0]};
                                s = rk4_step<1>(s, dt,
                                                [&](const std::array<double, 1>& v, double frac) {
                                                    double xd = history_.at_offset(delay_steps - frac);
                                                    return std::array<double, 1>{
                                                        mackeyglass_rhs(v[0], xd, q)};
                                                });
                                x[0] = s[0];
                            });
    }
    }
    throw ConfigError("unknown system");
}

void Simulator::run_transient(const WaveformSpec& signal, std::int64_t steps) {
    if (steps <= 0) return;
    int stride = steps + 1 < (1 << 30) ? static_cast<int>(steps + 1) : (1 << 30);
    advance(signal, static_cast<double>(steps) * spec_.dt, stride, 0.0);
}

Trajectory integrate(const SystemSpec& spec, const std::optional<std::vector<double>>& x0,
                     const WaveformSpec& signal, double duration, std::uint64_t seed,
                     int record_stride, double sigma_dyn) {
    if (x0) {
        Simulator sim(spec, *x0, seed);
        return sim.advance(signal, duration, record_stride, sigma_dyn);
    }
    Simulator sim(spec, seed);
    return sim.advance(signal, duration, record_stride, sigma_dyn);
}

} // namespace paramtrack
