#include "paramtrack/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "paramtrack/errors.hpp"

namespace paramtrack {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& path) {
    if (!j.is_object()) throw ConfigError("config: expected an object at " + path);
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key))
            throw ConfigError("config: unknown key " + path + "." + key);
    }
}

template <class T>
T get_or(const json& j, const std::string& key, const T& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: bad value type for key '" + key + "'");
    }
}

WaveformSpec waveform_from_json(const json& j, const WaveformSpec& defaults,
                                const std::string& path) {
    reject_unknown_keys(j, {"kind", "base", "amplitude", "carrier_period",
                            "modulation_period", "depth", "schedule"}, path);
    WaveformSpec w = defaults;
    if (j.contains("kind")) w.kind = waveform_kind_from_name(j.at("kind").get<std::string>());
    if (w.kind == WaveformKind::PiecewiseConstant) {
        if (!j.contains("schedule"))
            throw ConfigError("config: piecewise waveform needs " + path + ".schedule");
        w.schedule.clear();
        for (const auto& pair : j.at("schedule")) {
            if (!pair.is_array() || pair.size() != 2)
                throw ConfigError("config: schedule entries must be [value, duration] at " + path);
            w.schedule.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
        }
    }
    w.base = get_or(j, "base", w.base);
    w.amplitude = get_or(j, "amplitude", w.amplitude);
    w.carrier_period = get_or(j, "carrier_period", w.carrier_period);
    w.modulation_period = get_or(j, "modulation_period", w.modulation_period);
    w.depth = get_or(j, "depth", w.depth);
    return w;
}

} // namespace

RunConfig run_config_from_json(const json& j) {
    reject_unknown_keys(j, {"system", "observation", "reservoir", "training", "test",
                            "dynamical_noise", "calibration", "seed"}, "$");

    if (!j.contains("system") || !j.at("system").contains("name"))
        throw ConfigError("config: $.system.name is required");
    const json& sys = j.at("system");
    reject_unknown_keys(sys, {"name", "tracked_param", "dt", "constants", "delay"}, "$.system");

    SystemName name = system_name_from_str(sys.at("name").get<std::string>());
    std::string default_tracked;
    switch (name) {
    case SystemName::FoodChain: default_tracked = "K"; break;
    case SystemName::Rossler: default_tracked = "c"; break;
    case SystemName::MackeyGlass: default_tracked = "tau"; break;
    }
    std::string tracked = get_or(sys, "tracked_param", default_tracked);

    std::vector<int> mask{0};
    if (j.contains("observation") && j.at("observation").contains("mask"))
        mask = j.at("observation").at("mask").get<std::vector<int>>();

    WaveformKind kind = WaveformKind::AM;
    if (j.contains("test") && j.at("test").contains("waveform") &&
        j.at("test").at("waveform").contains("kind"))
        kind = waveform_kind_from_name(
            j.at("test").at("waveform").at("kind").get<std::string>());

    RunConfig cfg = default_run_config(
        name, tracked, mask,
        kind == WaveformKind::PiecewiseConstant ? WaveformKind::AM : kind);

    // System overrides.
    cfg.system.dt = get_or(sys, "dt", cfg.system.dt);
    if (sys.contains("constants")) {
        for (const auto& [pname, value] : sys.at("constants").items()) {
            if (!cfg.system.fixed_params.count(pname))
                throw ConfigError("config: unknown constant $.system.constants." + pname);
            cfg.system.fixed_params[pname] = value.get<double>();
        }
        cfg.system.nominal_value = cfg.system.fixed_params.at(tracked);
        if (name == SystemName::MackeyGlass)
            cfg.system.delay = cfg.system.fixed_params.at("tau");
    }
    if (sys.contains("delay")) {
        cfg.system.delay = sys.at("delay").get<double>();
        cfg.system.fixed_params["tau"] = cfg.system.delay;
    }

    // Training layout first: waveform defaults follow the switch interval.
    if (j.contains("training")) {
        const json& tr = j.at("training");
        reject_unknown_keys(tr, {"levels", "range_fraction", "center", "span",
                                 "switch_interval", "duration", "ordering", "schedule_seed"},
                            "$.training");
        if (tr.contains("switch_interval")) {
            double v = tr.at("switch_interval").get<double>();
            double carrier_ratio = cfg.test_waveform.carrier_period / cfg.switch_interval;
            cfg.train_duration = cfg.train_duration / cfg.switch_interval * v;
            cfg.test_duration = cfg.test_duration / cfg.switch_interval * v;
            cfg.test_waveform.carrier_period = carrier_ratio * v;
            cfg.test_waveform.modulation_period = 4.0 * cfg.test_waveform.carrier_period;
            cfg.switch_interval = v;
        }
        cfg.sn = get_or(tr, "levels", cfg.sn);
        cfg.sw = get_or(tr, "range_fraction", cfg.sw);
        if (tr.contains("center")) cfg.train_center = tr.at("center").get<double>();
        if (tr.contains("span")) cfg.train_span = tr.at("span").get<double>();
        if (tr.contains("schedule_seed"))
            cfg.schedule_seed = tr.at("schedule_seed").get<std::uint64_t>();
        cfg.train_duration = get_or(tr, "duration", cfg.train_duration);
        if (tr.contains("ordering")) {
            std::string o = tr.at("ordering").get<std::string>();
            if (o == "cyclic") cfg.ordering = Ordering::Cyclic;
            else if (o == "random") cfg.ordering = Ordering::Random;
            else throw ConfigError("config: $.training.ordering must be cyclic or random");
        }
    }

    if (j.contains("observation")) {
        const json& obs = j.at("observation");
        reject_unknown_keys(obs, {"mask", "sampling_interval", "measurement_noise"},
                            "$.observation");
        cfg.observation.mask = get_or(obs, "mask", cfg.observation.mask);
        cfg.observation.sampling_interval =
            get_or(obs, "sampling_interval", cfg.observation.sampling_interval);
        cfg.observation.sigma_meas = get_or(obs, "measurement_noise", 0.0);
    }

    if (j.contains("reservoir")) {
        const json& res = j.at("reservoir");
        reject_unknown_keys(res, {"size", "spectral_radius", "input_scaling", "leakage",
                                  "density", "bias_scaling", "ridge", "washout"},
                            "$.reservoir");
        auto& h = cfg.hyper;
        h.size = get_or(res, "size", h.size);
        h.spectral_radius = get_or(res, "spectral_radius", h.spectral_radius);
        h.input_scaling = get_or(res, "input_scaling", h.input_scaling);
        h.leakage = get_or(res, "leakage", h.leakage);
        h.density = get_or(res, "density", h.density);
        h.bias_scaling = get_or(res, "bias_scaling", h.bias_scaling);
        h.ridge = get_or(res, "ridge", h.ridge);
        h.washout = get_or(res, "washout", h.washout);
    }

    if (j.contains("test")) {
        const json& te = j.at("test");
        reject_unknown_keys(te, {"waveform", "duration"}, "$.test");
        if (te.contains("waveform"))
            cfg.test_waveform = waveform_from_json(te.at("waveform"), cfg.test_waveform,
                                                   "$.test.waveform");
        cfg.test_duration = get_or(te, "duration", cfg.test_duration);
    }

    cfg.sigma_dyn = get_or(j, "dynamical_noise", cfg.sigma_dyn);
    if (j.contains("calibration"))
        cfg.calibration = calibration_mode_from_name(j.at("calibration").get<std::string>());
    cfg.seed = get_or(j, "seed", cfg.seed);

    cfg.validate();
    return cfg;
}

SweepSpec sweep_spec_from_json(const json& j) {
    reject_unknown_keys(j, {"axis", "values", "realizations", "base"}, "$");
    if (!j.contains("axis") || !j.contains("values") || !j.contains("base"))
        throw ConfigError("config: sweep needs $.axis, $.values and $.base");

    SweepSpec spec;
    spec.axis = sweep_axis_from_name(j.at("axis").get<std::string>());
    for (const auto& v : j.at("values")) {
        if (spec.axis == SweepAxis::Mask)
            spec.values.push_back(SweepValue::of_mask(v.get<std::vector<int>>()));
        else
            spec.values.push_back(SweepValue::num(v.get<double>()));
    }
    spec.realizations = get_or(j, "realizations", 50);
    spec.base = run_config_from_json(j.at("base"));
    spec.validate();
    return spec;
}

HyperoptSpec hyperopt_spec_from_json(const json& j) {
    reject_unknown_keys(j, {"budget", "n_seeds", "mode", "bounds", "base"}, "$");
    if (!j.contains("base")) throw ConfigError("config: hyperopt needs $.base");

    HyperoptSpec spec;
    spec.budget = get_or(j, "budget", 80);
    spec.n_seeds = get_or(j, "n_seeds", 3);
    if (j.contains("mode")) {
        std::string m = j.at("mode").get<std::string>();
        if (m == "gp") spec.mode = OptMode::GpEi;
        else if (m == "random") spec.mode = OptMode::RandomSearch;
        else throw ConfigError("config: $.mode must be gp or random");
    }
    if (j.contains("bounds")) {
        for (const auto& [axis_name, bounds] : j.at("bounds").items()) {
            bool found = false;
            for (auto& axis : spec.space.axes) {
                if (axis.name != axis_name) continue;
                if (!bounds.is_array() || bounds.size() != 2)
                    throw ConfigError("config: $.bounds." + axis_name + " must be [lo, hi]");
                axis.lo = bounds.at(0).get<double>();
                axis.hi = bounds.at(1).get<double>();
                found = true;
            }
            if (!found) throw ConfigError("config: unknown axis $.bounds." + axis_name);
        }
    }
    spec.space.validate();
    spec.base = run_config_from_json(j.at("base"));
    return spec;
}

json run_config_to_json(const RunConfig& config) {
    json j;
    j["system"]["name"] = system_name_str(config.system.name);
    j["system"]["tracked_param"] = config.system.tracked_param;
    j["system"]["dt"] = config.system.dt;
    for (const auto& [k, v] : config.system.fixed_params)
        j["system"]["constants"][k] = v;
    j["observation"]["mask"] = config.observation.mask;
    j["observation"]["sampling_interval"] = config.observation.sampling_interval;
    j["observation"]["measurement_noise"] = config.observation.sigma_meas;
    j["reservoir"]["size"] = config.hyper.size;
    j["reservoir"]["spectral_radius"] = config.hyper.spectral_radius;
    j["reservoir"]["input_scaling"] = config.hyper.input_scaling;
    j["reservoir"]["leakage"] = config.hyper.leakage;
    j["reservoir"]["density"] = config.hyper.density;
    j["reservoir"]["bias_scaling"] = config.hyper.bias_scaling;
    j["reservoir"]["ridge"] = config.hyper.ridge;
    j["reservoir"]["washout"] = config.hyper.washout;
    j["training"]["levels"] = config.sn;
    j["training"]["range_fraction"] = config.sw;
    if (config.train_center) j["training"]["center"] = *config.train_center;
    if (config.train_span) j["training"]["span"] = *config.train_span;
    if (config.schedule_seed) j["training"]["schedule_seed"] = *config.schedule_seed;
    j["training"]["switch_interval"] = config.switch_interval;
    j["training"]["duration"] = config.train_duration;
    j["training"]["ordering"] = config.ordering == Ordering::Cyclic ? "cyclic" : "random";
    j["test"]["waveform"]["kind"] = waveform_kind_name(config.test_waveform.kind);
    if (config.test_waveform.kind == WaveformKind::PiecewiseConstant) {
        json sched = json::array();
        for (const auto& [v, d] : config.test_waveform.schedule)
            sched.push_back(json::array({v, d}));
        j["test"]["waveform"]["schedule"] = sched;
    } else {
        j["test"]["waveform"]["base"] = config.test_waveform.base;
        j["test"]["waveform"]["amplitude"] = config.test_waveform.amplitude;
        if (config.test_waveform.carrier_period > 0.0)
            j["test"]["waveform"]["carrier_period"] = config.test_waveform.carrier_period;
        if (config.test_waveform.modulation_period > 0.0)
            j["test"]["waveform"]["modulation_period"] = config.test_waveform.modulation_period;
        j["test"]["waveform"]["depth"] = config.test_waveform.depth;
    }
    j["test"]["duration"] = config.test_duration;
    j["dynamical_noise"] = config.sigma_dyn;
    j["calibration"] = calibration_mode_name(config.calibration);
    j["seed"] = config.seed;
    return j;
}

namespace {

json parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config: JSON parse error in " + path.string() + ": " + e.what());
    }
}

} // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
    return run_config_from_json(parse_file(path));
}

SweepSpec load_sweep_spec(const std::filesystem::path& path) {
    return sweep_spec_from_json(parse_file(path));
}

HyperoptSpec load_hyperopt_spec(const std::filesystem::path& path) {
    return hyperopt_spec_from_json(parse_file(path));
}

} // namespace paramtrack
