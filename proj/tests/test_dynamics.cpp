#include <doctest.h>

#include <array>
#include <cmath>

#include "paramtrack/dynamics.hpp"
#include "paramtrack/errors.hpp"
#include "paramtrack/rk4.hpp"
#include "paramtrack/rng.hpp"

using namespace paramtrack;

namespace {

const std::map<std::string, double> kFoodChainNominal = {
    {"K", 0.94}, {"x_c", 0.4}, {"y_c", 1.7}, {"x_p", 0.08},
    {"y_p", 5.0}, {"R_0", 0.16129}, {"C_0", 0.5}};

// Independent evaluation of the printed right-hand sides, written out
// term by term so it cannot share a bug with the library path.
std::array<double, 3> foodchain_oracle(double R, double C, double P,
                                       const std::map<std::string, double>& p) {
    double K = p.at("K"), x_c = p.at("x_c"), y_c = p.at("y_c"), x_p = p.at("x_p");
    double y_p = p.at("y_p"), R_0 = p.at("R_0"), C_0 = p.at("C_0");
    double dR = R * (1.0 - R / K) - x_c * y_c * C * R / (R + R_0);
    double dC = x_c * C * (y_c * R / (R + R_0) - 1.0) - x_p * y_p * P * C / (C + C_0);
    double dP = x_p * P * (y_p * C / (C + C_0) - 1.0);
    return {dR, dC, dP};
}

} // namespace

TEST_CASE("food-chain derivative matches the independent oracle") {
    SUBCASE("zero resource kills the resource terms") {
        auto d = foodchain_deriv({0.0, 1.0, 1.0}, kFoodChainNominal);
        CHECK(d[0] == 0.0);
    }
    SUBCASE("unit state at nominal constants") {
        auto d = foodchain_deriv({1.0, 1.0, 1.0}, kFoodChainNominal);
        auto e = foodchain_oracle(1.0, 1.0, 1.0, kFoodChainNominal);
        for (int i = 0; i < 3; ++i) CHECK(d[i] == doctest::Approx(e[i]).epsilon(1e-14));
        // the frozen reference point
        CHECK(d[0] == doctest::Approx(-0.64939).epsilon(2e-5));
        CHECK(d[1] == doctest::Approx(-0.08111).epsilon(2e-4));
        CHECK(d[2] == doctest::Approx(0.18667).epsilon(2e-5));
    }
    SUBCASE("random states agree with the oracle") {
        auto rng = make_rng(11);
        for (int i = 0; i < 50; ++i) {
            double R = uniform(rng, 0.0, 2.0), C = uniform(rng, 0.0, 2.0),
                   P = uniform(rng, 0.0, 2.0);
            auto d = foodchain_deriv({R, C, P}, kFoodChainNominal);
            auto e = foodchain_oracle(R, C, P, kFoodChainNominal);
            for (int k = 0; k < 3; ++k) CHECK(d[k] == doctest::Approx(e[k]).epsilon(1e-12));
        }
    }
    SUBCASE("missing parameter raises a configuration error") {
        auto params = kFoodChainNominal;
        params.erase("y_p");
        CHECK_THROWS_AS(foodchain_deriv({1, 1, 1}, params), ConfigError);
    }
    SUBCASE("non-finite state raises a numeric error") {
        CHECK_THROWS_AS(
            foodchain_deriv({std::nan(""), 1.0, 1.0}, kFoodChainNominal), NumericError);
    }
    SUBCASE("non-positive constants rejected") {
        auto params = kFoodChainNominal;
        params["K"] = 0.0;
        CHECK_THROWS_AS(foodchain_deriv({1, 1, 1}, params), ConfigError);
    }
}

TEST_CASE("rossler derivative") {
    std::map<std::string, double> params{{"a", 0.2}, {"b", 0.2}, {"c", 5.7}};
    SUBCASE("origin") {
        auto d = rossler_deriv({0, 0, 0}, params);
        CHECK(d[0] == 0.0);
        CHECK(d[1] == 0.0);
        CHECK(d[2] == doctest::Approx(0.2));
    }
    SUBCASE("unit state") {
        auto d = rossler_deriv({1, 1, 1}, params);
        CHECK(d[0] == doctest::Approx(-2.0));
        CHECK(d[1] == doctest::Approx(1.2));
        CHECK(d[2] == doctest::Approx(-4.5));
    }
    SUBCASE("missing parameter") {
        CHECK_THROWS_AS(rossler_deriv({1, 1, 1}, {{"a", 0.2}, {"b", 0.2}}), ConfigError);
    }
}

TEST_CASE("mackey-glass derivative") {
    std::map<std::string, double> params{{"beta", 0.2}, {"gamma", 0.1}, {"n", 10.0},
                                         {"tau", 17.0}};
    CHECK(mackeyglass_deriv(0.0, 0.0, params) == 0.0);
    // x = 1 is an equilibrium of the stock parameterization: 0.2/2 - 0.1 = 0
    CHECK(mackeyglass_deriv(1.0, 1.0, params) == doctest::Approx(0.0).epsilon(1e-15));

    auto bad_n = params;
    bad_n["n"] = 0.0;
    CHECK_THROWS_AS(mackeyglass_deriv(1.0, 1.0, bad_n), ConfigError);
    auto bad_gamma = params;
    bad_gamma["gamma"] = -0.1;
    CHECK_THROWS_AS(mackeyglass_deriv(1.0, 1.0, bad_gamma), ConfigError);
}

TEST_CASE("rk4 stepper reproduces exponential decay") {
    auto decay = [](const std::array<double, 1>& x, double) {
        return std::array<double, 1>{-x[0]};
    };
    SUBCASE("dt=0.01 matches exp(-1) to 1e-9") {
        std::array<double, 1> x{1.0};
        for (int i = 0; i < 100; ++i) x = rk4_step<1>(x, 0.01, decay);
        CHECK(std::abs(x[0] - std::exp(-1.0)) < 1e-9);
    }
    SUBCASE("global error falls by ~16x when dt halves") {
        auto run = [&](double dt) {
            std::array<double, 1> x{1.0};
            int n = static_cast<int>(std::llround(1.0 / dt));
            for (int i = 0; i < n; ++i) x = rk4_step<1>(x, dt, decay);
            return std::abs(x[0] - std::exp(-1.0));
        };
        double e1 = run(0.04);
        double e2 = run(0.02);
        double ratio = e1 / e2;
        CHECK(ratio >= 14.0);
        CHECK(ratio <= 18.0);
    }
}

TEST_CASE("integrate on the food chain") {
    SystemSpec spec = SystemSpec::food_chain("K");
    WaveformSpec constant = WaveformSpec::constant(0.94);

    SUBCASE("all-zero initial state is a fixed point") {
        Trajectory traj = integrate(spec, std::vector<double>{0, 0, 0}, constant, 10.0, 1);
        for (std::size_t k = 0; k < traj.size(); ++k)
            for (int i = 0; i < 3; ++i) CHECK(traj.state(k)[i] == 0.0);
    }
    SUBCASE("identical seeds give identical trajectories") {
        Trajectory a = integrate(spec, std::nullopt, constant, 20.0, 42);
        Trajectory b = integrate(spec, std::nullopt, constant, 20.0, 42);
        REQUIRE(a.size() == b.size());
        CHECK(a.states == b.states);
        CHECK(a.params == b.params);
    }
    SUBCASE("record stride thins the trajectory") {
        Trajectory full = integrate(spec, std::vector<double>{0.5, 0.5, 0.5}, constant, 5.0, 1);
        Trajectory thin = integrate(spec, std::vector<double>{0.5, 0.5, 0.5}, constant, 5.0, 1, 50);
        REQUIRE(full.size() == 500);
        REQUIRE(thin.size() == 10);
        for (std::size_t k = 0; k < thin.size(); ++k)
            for (int i = 0; i < 3; ++i)
                CHECK(thin.state(k)[i] == full.state(k * 50)[i]);
    }
    SUBCASE("bad duration is rejected") {
        CHECK_THROWS_AS(integrate(spec, std::nullopt, constant, 0.005, 1), ConfigError);
        CHECK_THROWS_AS(integrate(spec, std::nullopt, constant, -1.0, 1), ConfigError);
    }
}

TEST_CASE("divergence guard reports the failure time") {
    SystemSpec spec = SystemSpec::rossler("c");
    spec.fixed_params["b"] = 1e9; // dz/dt ~ 1e9 blows past the guard quickly
    WaveformSpec constant = WaveformSpec::constant(5.7);
    try {
        integrate(spec, std::vector<double>{0, 0, 0}, constant, 100.0, 1);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.failure_time() > 0.0);
        CHECK(e.failure_time() < 100.0);
    }
}

TEST_CASE("dynamical noise") {
    SystemSpec spec = SystemSpec::food_chain("K");
    WaveformSpec constant = WaveformSpec::constant(0.94);
    std::vector<double> x0{0.8, 0.2, 0.7};

    SUBCASE("zero noise is bitwise identical to the deterministic run") {
        Trajectory det = integrate(spec, x0, constant, 50.0, 7, 1, 0.0);
        Trajectory z = integrate(spec, x0, constant, 50.0, 7, 1, 0.0);
        CHECK(det.states == z.states);
    }
    SUBCASE("different seeds diverge") {
        Trajectory a = integrate(spec, x0, constant, 200.0, 1, 1, 1e-3);
        Trajectory b = integrate(spec, x0, constant, 200.0, 2, 1, 1e-3);
        double max_gap = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k)
            max_gap = std::max(max_gap, std::abs(a.state(k)[0] - b.state(k)[0]));
        CHECK(max_gap > 1e-4);
    }
    SUBCASE("same seed reproduces the noisy run") {
        Trajectory a = integrate(spec, x0, constant, 50.0, 9, 1, 1e-3);
        Trajectory b = integrate(spec, x0, constant, 50.0, 9, 1, 1e-3);
        CHECK(a.states == b.states);
    }
}

TEST_CASE("food-chain trajectories stay in a physical box") {
    SystemSpec spec = SystemSpec::food_chain("K");
    WaveformSpec constant = WaveformSpec::constant(0.94);
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        Simulator sim(spec, seed); // draws from [0.1, 1]^3
        Trajectory traj = sim.advance(constant, 10000.0, 100);
        for (std::size_t k = 0; k < traj.size(); ++k)
            for (int i = 0; i < 3; ++i) {
                CHECK(traj.state(k)[i] > 0.0);
                CHECK(traj.state(k)[i] < 10.0);
            }
    }
}

TEST_CASE("delay buffer interpolation") {
    SUBCASE("exact multiples return stored samples untouched") {
        DelayBuffer buf(6);
        buf.fill(0.0);
        for (double v : {1.0, 2.0, 3.0, 4.0, 5.0}) buf.push(v);
        CHECK(buf.at_offset(0.0) == 5.0);
        CHECK(buf.at_offset(1.0) == 4.0);
        CHECK(buf.at_offset(4.0) == 1.0);
    }
    SUBCASE("fractional offsets interpolate linearly") {
        DelayBuffer buf(4);
        buf.fill(0.0);
        buf.push(2.0);
        buf.push(4.0);
        CHECK(buf.at_offset(0.5) == doctest::Approx(3.0));
        CHECK(buf.at_offset(0.25) == doctest::Approx(3.5));
    }
    SUBCASE("lookups beyond the history fail loudly") {
        DelayBuffer buf(3);
        buf.fill(1.0);
        CHECK_THROWS_AS(buf.at_offset(5.0), NumericError);
        CHECK_THROWS_AS(buf.at_offset(-1.0), NumericError);
    }
}

TEST_CASE("mackey-glass integration uses the exact stored delay samples") {
    SystemSpec spec = SystemSpec::mackey_glass("beta");
    spec.fixed_params["tau"] = 0.05; // 5 steps at dt = 0.01
    spec.delay = 0.05;
    WaveformSpec constant = WaveformSpec::constant(0.2);

    // Hand-rolled method-of-steps oracle for tau an exact multiple of dt:
    // the delayed value is the state from exactly 5 steps ago.
    std::vector<double> history(6, 1.2);
    auto rhs = [](double x, double xd) {
        double p = 1.0;
        for (int i = 0; i < 10; ++i) p *= xd;
        return 0.2 * xd / (1.0 + p) - 0.1 * x;
    };
    std::vector<double> oracle{1.2};
    double x = 1.2;
    const double dt = 0.01;
    for (int step = 0; step < 400; ++step) {
        // RK4 stages with linear interpolation of the delayed value between
        // the stored samples at 5 and 4 steps back.
        double xd0 = history[history.size() - 6];
        double xd_half = 0.5 * (history[history.size() - 6] + history[history.size() - 5]);
        double xd1 = history[history.size() - 5];
        double k1 = rhs(x, xd0);
        double k2 = rhs(x + 0.5 * dt * k1, xd_half);
        double k3 = rhs(x + 0.5 * dt * k2, xd_half);
        double k4 = rhs(x + dt * k3, xd1);
        x += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        history.push_back(x);
        oracle.push_back(x);
    }

    Trajectory traj = integrate(spec, std::vector<double>{1.2}, constant, 4.0, 1);
    REQUIRE(traj.size() == 400);
    for (std::size_t k = 0; k < traj.size(); ++k)
        CHECK(traj.state(k)[0] == doctest::Approx(oracle[k]).epsilon(1e-12));
}

TEST_CASE("mackey-glass validation") {
    SystemSpec spec = SystemSpec::mackey_glass("tau");
    SUBCASE("tau below dt is rejected") {
        spec.fixed_params["tau"] = 0.001;
        spec.delay = 0.001;
        CHECK_THROWS_AS(spec.validate(), ConfigError);
    }
    SUBCASE("time-varying tau must stay above dt") {
        SystemSpec ok = SystemSpec::mackey_glass("tau");
        Simulator sim(ok, std::vector<double>{1.0}, 1);
        WaveformSpec bad = WaveformSpec::sawtooth(17.0, 17.0, 100.0); // dips to 0
        CHECK_THROWS_AS(sim.advance(bad, 1.0), ConfigError);
    }
}

TEST_CASE("simulator clock and continuation") {
    SystemSpec spec = SystemSpec::food_chain("K");
    WaveformSpec constant = WaveformSpec::constant(0.94);
    Simulator sim(spec, 5);
    sim.run_transient(constant, 1000);
    CHECK(sim.time() == doctest::Approx(10.0));
    sim.set_time(0.0);
    CHECK(sim.time() == 0.0);

    // Two consecutive advances equal one long advance from the same state.
    Simulator forked(spec, std::vector<double>(sim.state()), 5);
    Trajectory a1 = sim.advance(constant, 5.0);
    Trajectory a2 = sim.advance(constant, 5.0);
    Trajectory whole = forked.advance(constant, 10.0);
    REQUIRE(a1.size() + a2.size() == whole.size());
    CHECK(a2.t0 == doctest::Approx(5.0));
    for (std::size_t k = 0; k < a2.size(); ++k)
        CHECK(a2.state(k)[0] == whole.state(a1.size() + k)[0]);
}
