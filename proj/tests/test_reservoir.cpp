#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include <Eigen/Dense>

#include "paramtrack/errors.hpp"
#include "paramtrack/reservoir.hpp"
#include "paramtrack/rng.hpp"

using namespace paramtrack;

namespace {

/// Independent ridge oracle: dense least squares on the augmented system
///   [S 1; sqrt(ridge) I] w = [y; 0]
/// solved by SVD, no normal equations anywhere.
Eigen::VectorXd ridge_oracle(const Eigen::MatrixXd& states, const Eigen::VectorXd& targets,
                             double ridge, int washout) {
    const auto t = states.rows() - washout;
    const auto d = states.cols() + 1;
    Eigen::MatrixXd a(t + d, d);
    a.setZero();
    a.topLeftCorner(t, states.cols()) = states.bottomRows(t);
    a.block(0, states.cols(), t, 1).setOnes();
    a.bottomRows(d).diagonal().setConstant(std::sqrt(ridge));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(t + d);
    b.head(t) = targets.tail(t);
    return a.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(b);
}

ObservationSeries series_from_matrix(const Eigen::MatrixXd& samples, double dt = 1.0) {
    ObservationSeries s;
    s.t0 = 0.0;
    s.dt = dt;
    s.samples = samples;
    return s;
}

} // namespace

TEST_CASE("ridge readout matches the dense least-squares oracle") {
    auto rng = make_rng(123);
    for (int instance = 0; instance < 100; ++instance) {
        int t = 10 + static_cast<int>(uniform(rng, 0, 40));
        int d = 2 + static_cast<int>(uniform(rng, 0, 6));
        int washout = instance % 3;
        Eigen::MatrixXd states(t, d);
        Eigen::VectorXd targets(t);
        for (int i = 0; i < t; ++i) {
            targets(i) = uniform(rng, -2.0, 2.0);
            for (int j = 0; j < d; ++j) states(i, j) = uniform(rng, -1.0, 1.0);
        }
        double ridge = 1e-6;
        Eigen::RowVectorXd w = train_readout(states, targets, ridge, washout);
        Eigen::VectorXd expect = ridge_oracle(states, targets, ridge, washout);
        REQUIRE(w.size() == expect.size());
        for (Eigen::Index j = 0; j < w.size(); ++j)
            CHECK(w(j) == doctest::Approx(expect(j)).epsilon(1e-8));
    }
}

TEST_CASE("ridge readout degenerate cases") {
    SUBCASE("constant targets are reproduced exactly at zero ridge") {
        auto rng = make_rng(5);
        Eigen::MatrixXd states(40, 6);
        for (Eigen::Index i = 0; i < states.size(); ++i)
            states(i / 6, i % 6) = uniform(rng, -1.0, 1.0);
        Eigen::VectorXd targets = Eigen::VectorXd::Constant(40, 3.25);
        Eigen::RowVectorXd w = train_readout(states, targets, 0.0, 0);
        Eigen::VectorXd pred = states * w.head(6).transpose();
        pred.array() += w(6);
        for (Eigen::Index i = 0; i < pred.size(); ++i)
            CHECK(pred(i) == doctest::Approx(3.25).epsilon(1e-10));
    }
    SUBCASE("huge ridge shrinks the weights to zero") {
        auto rng = make_rng(6);
        Eigen::MatrixXd states(30, 4);
        Eigen::VectorXd targets(30);
        for (int i = 0; i < 30; ++i) {
            targets(i) = uniform(rng, -1.0, 1.0);
            for (int j = 0; j < 4; ++j) states(i, j) = uniform(rng, -1.0, 1.0);
        }
        Eigen::RowVectorXd w = train_readout(states, targets, 1e12, 0);
        CHECK(w.norm() < 1e-6);
    }
    SUBCASE("singular normal matrix at zero ridge raises an error") {
        Eigen::MatrixXd states = Eigen::MatrixXd::Zero(20, 5); // rank-deficient with bias
        states.col(1).setOnes(); // col 1 duplicates the bias column
        Eigen::VectorXd targets = Eigen::VectorXd::LinSpaced(20, 0.0, 1.0);
        CHECK_THROWS_WITH_AS(train_readout(states, targets, 0.0, 0),
                             doctest::Contains("ridge"), NumericError);
    }
    SUBCASE("length mismatch") {
        CHECK_THROWS_AS(train_readout(Eigen::MatrixXd::Zero(5, 2),
                                      Eigen::VectorXd::Zero(6), 1e-6, 0),
                        ConfigError);
    }
}

TEST_CASE("reservoir initialization") {
    ReservoirHyperparams hyper;
    hyper.size = 500;
    hyper.density = 0.02;
    hyper.spectral_radius = 0.9;

    SUBCASE("nonzero count is close to the expected density") {
        ReservoirMatrices mats = init_reservoir(hyper, 2, 11);
        double expected = 0.02 * 500.0 * 500.0;
        CHECK(std::abs(static_cast<double>(mats.recurrent.nonZeros()) - expected) <
              0.1 * expected);
    }
    SUBCASE("spectral radius lands within 0.1% of the target") {
        for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
            ReservoirMatrices mats = init_reservoir(hyper, 1, seed);
            double est = estimate_spectral_radius(mats.recurrent, 200,
                                                  mix_seed(seed, "radius-check"));
            CHECK(est == doctest::Approx(0.9).epsilon(1e-3));
        }
    }
    SUBCASE("zero target radius yields an all-zero matrix") {
        ReservoirHyperparams h = hyper;
        h.spectral_radius = 0.0;
        h.size = 50;
        ReservoirMatrices mats = init_reservoir(h, 1, 3);
        CHECK(Eigen::MatrixXd(mats.recurrent).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("same seed reproduces the matrices") {
        ReservoirHyperparams h = hyper;
        h.size = 60;
        ReservoirMatrices a = init_reservoir(h, 2, 17);
        ReservoirMatrices b = init_reservoir(h, 2, 17);
        CHECK(Eigen::MatrixXd(a.recurrent) == Eigen::MatrixXd(b.recurrent));
        CHECK(a.input == b.input);
        CHECK(a.bias == b.bias);
    }
    SUBCASE("input and bias scales bound the draws") {
        ReservoirHyperparams h = hyper;
        h.size = 80;
        h.input_scaling = 0.3;
        h.bias_scaling = 0.05;
        ReservoirMatrices mats = init_reservoir(h, 3, 23);
        CHECK(mats.input.cwiseAbs().maxCoeff() <= 0.3);
        CHECK(mats.bias.cwiseAbs().maxCoeff() <= 0.05);
    }
    SUBCASE("a hopeless density errors out after retries") {
        ReservoirHyperparams h = hyper;
        h.size = 4;
        h.density = 1e-9;
        CHECK_THROWS_AS(init_reservoir(h, 1, 1), NumericError);
    }
}

TEST_CASE("drive fixed points and boundaries") {
    ReservoirHyperparams hyper;
    hyper.size = 40;
    hyper.density = 0.2;
    hyper.spectral_radius = 0.8;
    hyper.bias_scaling = 0.0;
    ReservoirMatrices mats = init_reservoir(hyper, 1, 9);

    SUBCASE("zero input, zero state, zero bias stays at zero") {
        ObservationSeries series = series_from_matrix(Eigen::MatrixXd::Zero(50, 1));
        Eigen::MatrixXd states = drive(mats, hyper, series, InputStats::identity(1),
                                       Eigen::VectorXd::Zero(40));
        CHECK(states.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("alpha = 1 is the plain tanh update") {
        ReservoirHyperparams h = hyper;
        h.leakage = 1.0;
        Eigen::MatrixXd input(2, 1);
        input << 0.7, -0.4;
        ObservationSeries series = series_from_matrix(input);
        Eigen::VectorXd r0 = Eigen::VectorXd::Constant(40, 0.1);
        Eigen::MatrixXd states = drive(mats, h, series, InputStats::identity(1), r0);

        Eigen::VectorXd step1 =
            (mats.recurrent * r0 + mats.input * input.row(0).transpose() + mats.bias)
                .array().tanh();
        CHECK((states.row(0).transpose() - step1).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("channel mismatch is a configuration error") {
        ObservationSeries series = series_from_matrix(Eigen::MatrixXd::Zero(5, 2));
        CHECK_THROWS_AS(drive(mats, hyper, series, InputStats::identity(2),
                              Eigen::VectorXd::Zero(40)),
                        ConfigError);
    }
}

TEST_CASE("echo-state property: initial conditions wash out") {
    // Chaotic-looking scalar input; the property is about the reservoir, so a
    // deterministic surrogate signal is enough and fast.
    const int n = 2000;
    Eigen::MatrixXd input(n, 1);
    for (int k = 0; k < n; ++k)
        input(k, 0) = std::sin(0.31 * k) + 0.5 * std::sin(0.137 * k + 1.0);
    ObservationSeries series = series_from_matrix(input);

    for (double alpha : {0.3, 1.0}) {
        ReservoirHyperparams hyper;
        hyper.size = 300;
        hyper.density = 0.02;
        hyper.spectral_radius = 0.9;
        hyper.leakage = alpha;
        ReservoirMatrices mats = init_reservoir(hyper, 1, 31);

        auto rng = make_rng(77);
        Eigen::VectorXd r1(300), r2(300);
        for (int i = 0; i < 300; ++i) {
            r1(i) = uniform(rng, -1.0, 1.0);
            r2(i) = uniform(rng, -1.0, 1.0);
        }
        Eigen::MatrixXd s1 = drive(mats, hyper, series, InputStats::identity(1), r1);
        Eigen::MatrixXd s2 = drive(mats, hyper, series, InputStats::identity(1), r2);
        double final_gap = (s1.row(n - 1) - s2.row(n - 1)).norm();
        CHECK(final_gap < 1e-6);
    }
}

TEST_CASE("calibration algebra") {
    SUBCASE("pure offset") {
        Calibration c = calibrate(1.0, 1.1, 2.0, 2.1);
        CHECK(c.gain == doctest::Approx(1.0));
        CHECK(c.offset == doctest::Approx(-0.1));
    }
    SUBCASE("pure gain") {
        Calibration c = calibrate(1.0, 2.0, 2.0, 4.0);
        CHECK(c.gain == doctest::Approx(0.5));
        CHECK(c.offset == doctest::Approx(0.0));
    }
    SUBCASE("degenerate pairs are rejected") {
        CHECK_THROWS_AS(calibrate(1.0, 2.0, 1.0, 3.0), CalibrationError);
        CHECK_THROWS_AS(calibrate(1.0, 2.0, 2.0, 2.0), CalibrationError);
    }
    SUBCASE("offset-only mode") {
        Calibration c = calibrate_offset(0.94, 0.90);
        CHECK(c.gain == 1.0);
        CHECK(c.offset == doctest::Approx(0.04));
    }
    SUBCASE("identity leaves values unchanged") {
        Calibration c;
        CHECK(c.apply(0.375) == 0.375);
    }
}

TEST_CASE("train then track recovers a linear function of the input") {
    // Small input scaling keeps tanh in its linear regime, so a linear target
    // must be recoverable nearly exactly.
    const int n = 3000;
    auto rng = make_rng(2024);
    Eigen::MatrixXd input(n, 2);
    double a = 0.0, b = 0.0;
    for (int k = 0; k < n; ++k) {
        a = 0.98 * a + 0.1 * uniform(rng, -1.0, 1.0);
        b = 0.95 * b + 0.1 * uniform(rng, -1.0, 1.0);
        input(k, 0) = a;
        input(k, 1) = b;
    }
    Eigen::VectorXd targets = 0.3 * input.col(0) - 0.2 * input.col(1);
    targets.array() += 0.5;

    ReservoirHyperparams hyper;
    hyper.size = 300;
    hyper.density = 0.05;
    hyper.spectral_radius = 0.1;
    hyper.input_scaling = 0.01;
    hyper.leakage = 1.0;
    hyper.bias_scaling = 0.0;
    hyper.ridge = 1e-10;
    hyper.washout = 50;

    TrainedTracker tracker;
    tracker.hyper = hyper;
    tracker.mask = {0, 1};
    tracker.sampling_interval = 1.0;
    tracker.input_stats = InputStats::identity(2);
    tracker.matrices = init_reservoir(hyper, 2, 404);

    ObservationSeries series = series_from_matrix(input);
    Eigen::MatrixXd states = drive(tracker.matrices, hyper, series,
                                   tracker.input_stats, Eigen::VectorXd::Zero(300));
    tracker.readout = train_readout(states, targets, hyper.ridge, hyper.washout);

    Eigen::VectorXd out = track(tracker, series);
    Eigen::VectorXd err = (out - targets).tail(n - hyper.washout);
    double nrmse = std::sqrt(err.squaredNorm() / err.size()) /
                   (targets.maxCoeff() - targets.minCoeff());
    CHECK(nrmse < 1e-3);
}

TEST_CASE("tracker bundles round-trip through disk") {
    ReservoirHyperparams hyper;
    hyper.size = 60;
    hyper.density = 0.1;
    TrainedTracker tracker;
    tracker.hyper = hyper;
    tracker.mask = {0, 2};
    tracker.sampling_interval = 2.5;
    tracker.system = "foodchain";
    tracker.tracked_param = "K";
    tracker.matrices = init_reservoir(hyper, 2, 55);
    tracker.input_stats.mean = Eigen::Vector2d(0.31, -0.07);
    tracker.input_stats.std = Eigen::Vector2d(1.7, 0.4);
    auto rng = make_rng(3);
    tracker.readout.resize(61);
    for (int i = 0; i < 61; ++i) tracker.readout(i) = uniform(rng, -1.0, 1.0);
    tracker.calib = {1.25, -0.5};

    auto path = std::filesystem::temp_directory_path() / "paramtrack_test_tracker.txt";
    save_tracker(tracker, path);
    TrainedTracker loaded = load_tracker(path);
    std::filesystem::remove(path);

    CHECK(loaded.mask == tracker.mask);
    CHECK(loaded.system == "foodchain");
    CHECK(loaded.tracked_param == "K");
    CHECK(loaded.hyper.size == 60);
    CHECK(loaded.calib.gain == tracker.calib.gain);
    CHECK(loaded.calib.offset == tracker.calib.offset);

    Eigen::MatrixXd input(40, 2);
    auto rng2 = make_rng(8);
    for (Eigen::Index i = 0; i < input.rows(); ++i) {
        input(i, 0) = uniform(rng2, -1.0, 1.0);
        input(i, 1) = uniform(rng2, -1.0, 1.0);
    }
    ObservationSeries series = series_from_matrix(input);
    Eigen::VectorXd a = track(tracker, series);
    Eigen::VectorXd b = track(loaded, series);
    CHECK(a == b); // exact: %.17g round-trips doubles
}
