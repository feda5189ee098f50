#pragma once

#include <algorithm>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "overlap/sim.hpp"
#include "overlap/suites.hpp"

namespace overlap::cli {

using json = nlohmann::ordered_json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& context) {
    if (!j.is_object()) throw ConfigError(context + ": expected a JSON object");
    for (const auto& item : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) {
            return item.key() == k;
        });
        if (!known) throw ConfigError(context + ": unknown key '" + item.key() + "'");
    }
}

inline double need_number(const json& j, const char* key, const std::string& context) {
    if (!j.contains(key)) throw ConfigError(context + ": missing '" + key + "'");
    if (!j[key].is_number()) throw ConfigError(context + ": '" + key + "' must be a number");
    return j[key].get<double>();
}

inline std::vector<double> need_array(const json& j, const char* key, const std::string& context) {
    if (!j.contains(key) || !j[key].is_array())
        throw ConfigError(context + ": missing array '" + key + "'");
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number()) throw ConfigError(context + ": '" + key + "' must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

// ---------------------------------------------------------------------------
// DistSpec
// ---------------------------------------------------------------------------

inline DistSpec dist_from_json(const json& j, const std::string& context) {
    if (!j.is_object() || !j.contains("type"))
        throw ConfigError(context + ": distribution needs a 'type'");
    const std::string type = j["type"].get<std::string>();
    DistSpec spec = Exponential{1.0};
    if (type == "exponential") {
        require_keys(j, {"type", "rate"}, context);
        spec = Exponential{need_number(j, "rate", context)};
    } else if (type == "erlang") {
        require_keys(j, {"type", "shape", "rate"}, context);
        spec = Erlang{static_cast<int>(need_number(j, "shape", context)),
                      need_number(j, "rate", context)};
    } else if (type == "gamma") {
        require_keys(j, {"type", "shape", "rate"}, context);
        spec = Gamma{need_number(j, "shape", context), need_number(j, "rate", context)};
    } else if (type == "deterministic") {
        require_keys(j, {"type", "value"}, context);
        spec = Deterministic{need_number(j, "value", context)};
    } else if (type == "deterministic-mixture") {
        require_keys(j, {"type", "weights", "values"}, context);
        spec = DeterministicMixture{need_array(j, "weights", context),
                                    need_array(j, "values", context)};
    } else if (type == "uniform") {
        require_keys(j, {"type", "a", "b"}, context);
        spec = Uniform{need_number(j, "a", context), need_number(j, "b", context)};
    } else if (type == "truncated-normal") {
        require_keys(j, {"type", "a", "b", "location", "scale"}, context);
        spec = TruncatedNormal{need_number(j, "a", context), need_number(j, "b", context),
                               need_number(j, "location", context),
                               need_number(j, "scale", context)};
    } else if (type == "lognormal") {
        require_keys(j, {"type", "mean", "variance"}, context);
        spec = LogNormal{need_number(j, "mean", context), need_number(j, "variance", context)};
    } else if (type == "hyper-exponential") {
        require_keys(j, {"type", "weights", "rates"}, context);
        spec = HyperExponential{need_array(j, "weights", context),
                                need_array(j, "rates", context)};
    } else {
        throw ConfigError(context + ": unknown distribution type '" + type + "'");
    }
    try {
        validate(spec);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(context + ": " + e.what());
    }
    return spec;
}

inline json dist_to_json(const DistSpec& spec) {
    json j;
    std::visit(detail::Overloaded{
                   [&](const Exponential& d) {
                       j["type"] = "exponential";
                       j["rate"] = d.rate;
                   },
                   [&](const Erlang& d) {
                       j["type"] = "erlang";
                       j["shape"] = d.shape;
                       j["rate"] = d.rate;
                   },
                   [&](const Gamma& d) {
                       j["type"] = "gamma";
                       j["shape"] = d.shape;
                       j["rate"] = d.rate;
                   },
                   [&](const Deterministic& d) {
                       j["type"] = "deterministic";
                       j["value"] = d.value;
                   },
                   [&](const DeterministicMixture& d) {
                       j["type"] = "deterministic-mixture";
                       j["weights"] = d.weights;
                       j["values"] = d.values;
                   },
                   [&](const Uniform& d) {
                       j["type"] = "uniform";
                       j["a"] = d.a;
                       j["b"] = d.b;
                   },
                   [&](const TruncatedNormal& d) {
                       j["type"] = "truncated-normal";
                       j["a"] = d.a;
                       j["b"] = d.b;
                       j["location"] = d.location;
                       j["scale"] = d.scale;
                   },
                   [&](const LogNormal& d) {
                       j["type"] = "lognormal";
                       j["mean"] = d.mean;
                       j["variance"] = d.variance;
                   },
                   [&](const HyperExponential& d) {
                       j["type"] = "hyper-exponential";
                       j["weights"] = d.weights;
                       j["rates"] = d.rates;
                   }},
               spec);
    return j;
}

// ---------------------------------------------------------------------------
// RateProfile and ArrivalSpec
// ---------------------------------------------------------------------------

inline RateProfile profile_from_json(const json& j, const std::string& context) {
    require_keys(j, {"breaks", "rates", "horizon"}, context);
    RateProfile profile;
    profile.breaks = need_array(j, "breaks", context);
    profile.rates = need_array(j, "rates", context);
    if (j.contains("horizon")) profile.horizon = need_number(j, "horizon", context);
    try {
        profile.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(context + ": " + e.what());
    }
    return profile;
}

inline json profile_to_json(const RateProfile& profile) {
    json j;
    j["breaks"] = profile.breaks;
    j["rates"] = profile.rates;
    if (profile.horizon) j["horizon"] = *profile.horizon;
    return j;
}

inline ArrivalSpec arrival_from_json(const json& j, const std::string& context) {
    if (!j.is_object() || !j.contains("type"))
        throw ConfigError(context + ": arrival spec needs a 'type'");
    const std::string type = j["type"].get<std::string>();
    if (type == "poisson") {
        require_keys(j, {"type", "rate"}, context);
        return PoissonConstant{need_number(j, "rate", context)};
    }
    if (type == "poisson-profile") {
        require_keys(j, {"type", "profile"}, context);
        if (!j.contains("profile")) throw ConfigError(context + ": missing 'profile'");
        return PoissonProfile{profile_from_json(j["profile"], context + ".profile")};
    }
    if (type == "renewal") {
        require_keys(j, {"type", "interarrival"}, context);
        if (!j.contains("interarrival")) throw ConfigError(context + ": missing 'interarrival'");
        return RenewalArrivals{dist_from_json(j["interarrival"], context + ".interarrival")};
    }
    throw ConfigError(context + ": unknown arrival type '" + type + "'");
}

inline json arrival_to_json(const ArrivalSpec& spec) {
    json j;
    std::visit(detail::Overloaded{
                   [&](const PoissonConstant& p) {
                       j["type"] = "poisson";
                       j["rate"] = p.rate;
                   },
                   [&](const PoissonProfile& p) {
                       j["type"] = "poisson-profile";
                       j["profile"] = profile_to_json(p.profile);
                   },
                   [&](const RenewalArrivals& r) {
                       j["type"] = "renewal";
                       j["interarrival"] = dist_to_json(r.interarrival);
                   }},
               spec);
    return j;
}

// ---------------------------------------------------------------------------
// Simulate configuration (RunConfig + output controls)
// ---------------------------------------------------------------------------

struct SimulateConfig {
    RunConfig run;
    std::optional<double> delta;
    int k_max = 4;
    std::string output_dir = ".";
    std::vector<std::string> formats = {"csv"};
};

inline SimulateConfig simulate_config_from_json(const json& j) {
    require_keys(j,
                 {"arrival", "service", "stop", "warmup", "seed", "replications", "delta",
                  "k_max", "output_dir", "formats"},
                 "config");
    SimulateConfig cfg;
    if (j.contains("arrival")) cfg.run.arrival = arrival_from_json(j["arrival"], "config.arrival");
    if (j.contains("service")) cfg.run.service = dist_from_json(j["service"], "config.service");
    if (j.contains("stop")) {
        require_keys(j["stop"], {"customers", "horizon"}, "config.stop");
        if (j["stop"].contains("customers"))
            cfg.run.stop_customers = static_cast<std::int64_t>(
                need_number(j["stop"], "customers", "config.stop"));
        if (j["stop"].contains("horizon"))
            cfg.run.stop_horizon = need_number(j["stop"], "horizon", "config.stop");
    }
    if (j.contains("warmup")) {
        require_keys(j["warmup"], {"time", "customers"}, "config.warmup");
        if (j["warmup"].contains("time"))
            cfg.run.warmup_time = need_number(j["warmup"], "time", "config.warmup");
        if (j["warmup"].contains("customers"))
            cfg.run.warmup_customers = static_cast<std::int64_t>(
                need_number(j["warmup"], "customers", "config.warmup"));
    }
    if (j.contains("seed")) cfg.run.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("replications"))
        cfg.run.replications = static_cast<std::int64_t>(need_number(j, "replications", "config"));
    if (j.contains("delta")) cfg.delta = need_number(j, "delta", "config");
    if (j.contains("k_max")) cfg.k_max = static_cast<int>(need_number(j, "k_max", "config"));
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("formats")) {
        cfg.formats.clear();
        for (const auto& f : j["formats"]) cfg.formats.push_back(f.get<std::string>());
        for (const auto& f : cfg.formats)
            if (f != "csv" && f != "json")
                throw ConfigError("config.formats: unknown format '" + f + "'");
    }
    return cfg;
}

inline json simulate_config_to_json(const SimulateConfig& cfg) {
    json j;
    j["arrival"] = arrival_to_json(cfg.run.arrival);
    j["service"] = dist_to_json(cfg.run.service);
    json stop;
    if (cfg.run.stop_customers) stop["customers"] = *cfg.run.stop_customers;
    if (cfg.run.stop_horizon) stop["horizon"] = *cfg.run.stop_horizon;
    j["stop"] = stop;
    if (cfg.run.warmup_time || cfg.run.warmup_customers) {
        json warmup;
        if (cfg.run.warmup_time) warmup["time"] = *cfg.run.warmup_time;
        if (cfg.run.warmup_customers) warmup["customers"] = *cfg.run.warmup_customers;
        j["warmup"] = warmup;
    }
    j["seed"] = cfg.run.seed;
    j["replications"] = cfg.run.replications;
    if (cfg.delta) j["delta"] = *cfg.delta;
    j["k_max"] = cfg.k_max;
    j["output_dir"] = cfg.output_dir;
    j["formats"] = cfg.formats;
    return j;
}

inline json report_to_json(const VerificationReport& r) {
    json j;
    j["check"] = r.check;
    j["parameters"] = r.parameters;
    j["n"] = r.n;
    j["statistic"] = r.statistic;
    j["observed"] = r.observed;
    j["threshold"] = r.threshold;
    j["pass"] = r.pass;
    j["seed"] = r.seed;
    j["notes"] = r.notes;
    return j;
}

inline json suite_options_to_json(const SuiteOptions& opts) {
    json j;
    j["n"] = opts.n;
    j["seed"] = opts.seed;
    json thresholds;
    thresholds["ks_fixed"] = opts.ks_fixed_threshold;
    thresholds["tv"] = opts.policy.tv_threshold;
    thresholds["z"] = opts.policy.z_threshold;
    thresholds["chi2_p_floor"] = opts.policy.chi2_p_floor;
    thresholds["atom_abs_window"] = opts.atom_abs_window;
    thresholds["mle_rate_window"] = opts.mle_rate_window;
    thresholds["mean_rel_window"] = opts.mean_rel_window;
    thresholds["residual_mean_rel_window"] = opts.residual_mean_rel_window;
    thresholds["lognormal_tv"] = opts.lognormal_tv_threshold;
    j["thresholds"] = thresholds;
    j["variance_arbitration_n"] = opts.variance_arbitration_n;
    return j;
}

}  // namespace overlap::cli
