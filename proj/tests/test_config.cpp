#include <doctest.h>

#include <nlohmann/json.hpp>

#include "paramtrack/config.hpp"
#include "paramtrack/errors.hpp"

using namespace paramtrack;
using nlohmann::json;

TEST_CASE("minimal config fills the stock defaults") {
    json j = {{"system", {{"name", "foodchain"}}}};
    RunConfig cfg = run_config_from_json(j);
    CHECK(cfg.system.tracked_param == "K");
    CHECK(cfg.switch_interval == 62.5);
    CHECK(cfg.train_duration == doctest::Approx(900.0 * 62.5));
    CHECK(cfg.test_waveform.kind == WaveformKind::AM);
    CHECK(cfg.seed == kDefaultSeed);
}

TEST_CASE("unknown keys are rejected with their path") {
    json j = {{"system", {{"name", "foodchain"}, {"colour", "red"}}}};
    CHECK_THROWS_WITH_AS(run_config_from_json(j), doctest::Contains("$.system.colour"),
                         ConfigError);

    json j2 = {{"system", {{"name", "foodchain"}}}, {"trainin", json::object()}};
    CHECK_THROWS_WITH_AS(run_config_from_json(j2), doctest::Contains("$.trainin"), ConfigError);

    json j3 = {{"system", {{"name", "foodchain"}}},
               {"reservoir", {{"sise", 100}}}};
    CHECK_THROWS_WITH_AS(run_config_from_json(j3), doctest::Contains("$.reservoir.sise"),
                         ConfigError);
}

TEST_CASE("overrides land in the right places") {
    json j = {
        {"system", {{"name", "foodchain"}, {"tracked_param", "y_c"},
                    {"constants", {{"K", 0.99}}}}},
        {"observation", {{"mask", {0, 1}}, {"measurement_noise", 0.02}}},
        {"reservoir", {{"size", 350}, {"leakage", 0.15}}},
        {"training", {{"levels", 3}, {"range_fraction", 0.5}}},
        {"test", {{"waveform", {{"kind", "sawtooth"}}}}},
        {"dynamical_noise", 1e-4},
        {"seed", 99},
    };
    RunConfig cfg = run_config_from_json(j);
    CHECK(cfg.system.tracked_param == "y_c");
    CHECK(cfg.system.nominal_value == doctest::Approx(1.7));
    CHECK(cfg.system.fixed_params.at("K") == 0.99);
    CHECK(cfg.observation.mask == std::vector<int>{0, 1});
    CHECK(cfg.observation.sigma_meas == 0.02);
    CHECK(cfg.hyper.size == 350);
    CHECK(cfg.hyper.leakage == 0.15);
    CHECK(cfg.sn == 3);
    CHECK(cfg.sw == 0.5);
    CHECK(cfg.test_waveform.kind == WaveformKind::Sawtooth);
    CHECK(cfg.test_waveform.base == doctest::Approx(1.7));
    CHECK(cfg.sigma_dyn == 1e-4);
    CHECK(cfg.seed == 99);
}

TEST_CASE("switch interval override rescales dependent defaults") {
    json j = {{"system", {{"name", "foodchain"}}},
              {"training", {{"switch_interval", 25.0}}}};
    RunConfig cfg = run_config_from_json(j);
    CHECK(cfg.switch_interval == 25.0);
    CHECK(cfg.train_duration == doctest::Approx(900.0 * 25.0));
    CHECK(cfg.test_duration == doctest::Approx(1000.0 * 25.0));
    CHECK(cfg.test_waveform.carrier_period == doctest::Approx(250.0 * 25.0));
}

TEST_CASE("round trip through json preserves the fingerprint") {
    RunConfig cfg = default_run_config(SystemName::Rossler, "c", {0, 2}, WaveformKind::FM);
    cfg.sn = 4;
    cfg.sw = 0.6;
    cfg.observation.sigma_meas = 0.01;
    cfg.seed = 1234;
    RunConfig back = run_config_from_json(run_config_to_json(cfg));
    CHECK(fingerprint(back) == fingerprint(cfg));
}

TEST_CASE("piecewise test waveform needs a schedule") {
    json j = {{"system", {{"name", "foodchain"}}},
              {"test", {{"waveform", {{"kind", "piecewise"}}}}}};
    CHECK_THROWS_AS(run_config_from_json(j), ConfigError);

    json ok = {{"system", {{"name", "foodchain"}}},
               {"test", {{"waveform", {{"kind", "piecewise"},
                                       {"schedule", {{0.9, 31250.0}, {1.0, 31250.0}}}}},
                         {"duration", 62500.0}}},
               {"training", {{"duration", 62500.0}}}};
    RunConfig cfg = run_config_from_json(ok);
    CHECK(cfg.test_waveform.kind == WaveformKind::PiecewiseConstant);
    CHECK(cfg.test_waveform.schedule.size() == 2);
}

TEST_CASE("sweep spec parsing") {
    json j = {{"axis", "sn"},
              {"values", {1, 3, 5}},
              {"realizations", 4},
              {"base", {{"system", {{"name", "foodchain"}}}}}};
    SweepSpec spec = sweep_spec_from_json(j);
    CHECK(spec.axis == SweepAxis::Sn);
    CHECK(spec.values.size() == 3);
    CHECK(spec.realizations == 4);

    json m = j;
    m["axis"] = "mask";
    m["values"] = {{0}, {0, 1}};
    SweepSpec mask_spec = sweep_spec_from_json(m);
    CHECK(mask_spec.values[1].mask == std::vector<int>{0, 1});

    json bad = j;
    bad["axis"] = "notanaxis";
    CHECK_THROWS_AS(sweep_spec_from_json(bad), ConfigError);
}

TEST_CASE("hyperopt spec parsing") {
    json j = {{"budget", 30},
              {"n_seeds", 2},
              {"mode", "random"},
              {"bounds", {{"spectral_radius", {0.3, 1.2}}}},
              {"base", {{"system", {{"name", "foodchain"}}}}}};
    HyperoptSpec spec = hyperopt_spec_from_json(j);
    CHECK(spec.budget == 30);
    CHECK(spec.n_seeds == 2);
    CHECK(spec.mode == OptMode::RandomSearch);
    CHECK(spec.space.axes[0].lo == 0.3);
    CHECK(spec.space.axes[0].hi == 1.2);

    json bad = j;
    bad["bounds"]["bogus_axis"] = {0.0, 1.0};
    CHECK_THROWS_AS(hyperopt_spec_from_json(bad), ConfigError);
}
