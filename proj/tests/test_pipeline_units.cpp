#include <doctest.h>

#include <cmath>
#include <set>

#include "paramtrack/errors.hpp"
#include "paramtrack/pipeline.hpp"

using namespace paramtrack;

TEST_CASE("rmse") {
    Eigen::VectorXd a(2), b(2);
    a << 0, 0;
    b << 0, 0;
    CHECK(rmse(a, b) == 0.0);
    b << 1, 1;
    CHECK(rmse(a, b) == doctest::Approx(1.0));
    a << 0, 2;
    b << 0, 0;
    CHECK(rmse(a, b) == doctest::Approx(std::sqrt(2.0)));
    Eigen::VectorXd c(3);
    CHECK_THROWS_AS(rmse(a, c), ConfigError);
}

TEST_CASE("default run config mirrors the stock experiment layout") {
    RunConfig cfg = default_run_config(SystemName::FoodChain, "K", {0}, WaveformKind::AM);
    CHECK(cfg.system.nominal_value == doctest::Approx(0.94));
    CHECK(cfg.observation.sampling_interval == 2.5);
    CHECK(cfg.switch_interval == 62.5);
    CHECK(cfg.train_duration == doctest::Approx(900.0 * 62.5));
    CHECK(cfg.test_duration >= cfg.train_duration);
    CHECK(cfg.test_waveform.base == doctest::Approx(0.94));
    CHECK(cfg.test_waveform.amplitude == doctest::Approx(0.094));
    CHECK(cfg.test_waveform.carrier_period == doctest::Approx(250.0 * 62.5));
    CHECK(cfg.samples_per_segment() == 25);
    CHECK(cfg.segments() == 900);
    CHECK_NOTHROW(cfg.validate());

    RunConfig mg = default_run_config(SystemName::MackeyGlass, "tau", {0}, WaveformKind::FM);
    CHECK_NOTHROW(mg.validate());
    RunConfig ro = default_run_config(SystemName::Rossler, "c", {0, 1}, WaveformKind::Sawtooth);
    CHECK_NOTHROW(ro.validate());
}

TEST_CASE("config validation catches interval mismatches") {
    RunConfig cfg = default_run_config(SystemName::FoodChain, "K", {0}, WaveformKind::AM);
    SUBCASE("switch interval must be a multiple of the sampling interval") {
        cfg.switch_interval = 63.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("training duration must be a multiple of the switch interval") {
        cfg.train_duration = 900.0 * 62.5 + 10.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("test must not be shorter than training") {
        cfg.test_duration = cfg.train_duration - 62.5;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("sn of zero") {
        cfg.sn = 0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("sw out of range") {
        cfg.sw = 1.5;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("build_training_set assembles aligned segments") {
    RunConfig cfg = default_run_config(SystemName::FoodChain, "K", {0}, WaveformKind::AM);
    cfg.sn = 3;
    cfg.train_duration = 10.0 * cfg.switch_interval; // small for the unit suite
    cfg.seed = 91;

    TrainingSet ts = build_training_set(cfg);
    const int seg = cfg.samples_per_segment();
    REQUIRE(ts.segment_levels.size() == 10);
    REQUIRE(ts.inputs.samples.rows() == 10 * seg);
    REQUIRE(ts.targets.size() == 10 * seg);
    CHECK(ts.samples_per_segment == seg);

    SUBCASE("targets are the generating level, constant across each segment") {
        for (int s = 0; s < 10; ++s)
            for (int k = 0; k < seg; ++k)
                CHECK(ts.targets(s * seg + k) == ts.segment_levels[s]);
    }
    SUBCASE("segment levels come from the training values and all levels appear") {
        std::set<double> levels(ts.segment_levels.begin(), ts.segment_levels.end());
        CHECK(levels.size() == 3);
        CHECK(levels.count(0.94 - 0.094));
        CHECK(levels.count(0.94));
        CHECK(levels.count(0.94 + 0.094));
    }
    SUBCASE("deterministic for a fixed seed") {
        TrainingSet again = build_training_set(cfg);
        CHECK(again.inputs.samples == ts.inputs.samples);
        CHECK(again.targets == ts.targets);
        CHECK(again.segment_levels == ts.segment_levels);
    }
    SUBCASE("single level is stationary") {
        cfg.sn = 1;
        TrainingSet one = build_training_set(cfg);
        for (Eigen::Index k = 0; k < one.targets.size(); ++k)
            CHECK(one.targets(k) == 0.94);
    }
    SUBCASE("switch interval must divide into samples") {
        cfg.observation.sampling_interval = 2.4;
        CHECK_THROWS_AS(build_training_set(cfg), ConfigError);
    }
}

TEST_CASE("fingerprint distinguishes configs and ignores nothing relevant") {
    RunConfig a = default_run_config(SystemName::FoodChain, "K", {0}, WaveformKind::AM);
    RunConfig b = a;
    CHECK(fingerprint(a) == fingerprint(b));
    b.seed += 1;
    CHECK(fingerprint(a) != fingerprint(b));
    b = a;
    b.sn = 4;
    CHECK(fingerprint(a) != fingerprint(b));
    b = a;
    b.observation.mask = {1};
    CHECK(fingerprint(a) != fingerprint(b));
}
