#include "imbopt.h"

#include <cstring>
#include <string>

#include "imbopt/batteries.hpp"
#include "imbopt/errors.hpp"
#include "imbopt/experiment.hpp"
#include "json.hpp"

namespace {

thread_local std::string t_last_error;

imbopt_status record_error(imbopt_status st, const std::string& msg) {
    t_last_error = msg;
    return st;
}

imbopt_status map_exception() {
    try {
        throw;
    } catch (const imbopt::ConfigError& e) {
        return record_error(IMBOPT_ERR_CONFIG, e.what());
    } catch (const imbopt::IoError& e) {
        return record_error(IMBOPT_ERR_IO, e.what());
    } catch (const imbopt::DomainError& e) {
        return record_error(IMBOPT_ERR_DOMAIN, e.what());
    } catch (const imbopt::DimensionError& e) {
        return record_error(IMBOPT_ERR_DOMAIN, e.what());
    } catch (const std::exception& e) {
        return record_error(IMBOPT_ERR_INTERNAL, e.what());
    } catch (...) {
        return record_error(IMBOPT_ERR_INTERNAL, "unknown error");
    }
}

}  // namespace

struct imbopt_experiment {
    imbopt::exp::ExperimentConfig config;
    imbopt::exp::ExperimentResult result;
    bool has_result = false;
    std::string error;
};

extern "C" {

const char* imbopt_version(void) { return "0.1.0"; }

const char* imbopt_status_message(imbopt_status status) {
    switch (status) {
        case IMBOPT_OK: return "ok";
        case IMBOPT_ERR_INVALID_ARG: return "invalid argument";
        case IMBOPT_ERR_CONFIG: return "configuration error";
        case IMBOPT_ERR_IO: return "i/o error";
        case IMBOPT_ERR_DOMAIN: return "domain error";
        case IMBOPT_ERR_VIOLATION: return "bound violation";
        case IMBOPT_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* imbopt_last_error(void) { return t_last_error.c_str(); }

imbopt_status imbopt_experiment_from_json(const char* json_text, imbopt_experiment** out) {
    if (!json_text || !out) return record_error(IMBOPT_ERR_INVALID_ARG, "null argument");
    *out = nullptr;
    try {
        auto* e = new imbopt_experiment;
        e->config = imbopt::exp::ExperimentConfig::from_json_text(json_text);
        *out = e;
        return IMBOPT_OK;
    } catch (...) {
        return map_exception();
    }
}

imbopt_status imbopt_experiment_from_file(const char* config_path, imbopt_experiment** out) {
    if (!config_path || !out) return record_error(IMBOPT_ERR_INVALID_ARG, "null argument");
    *out = nullptr;
    try {
        auto* e = new imbopt_experiment;
        e->config = imbopt::exp::ExperimentConfig::from_file(config_path);
        *out = e;
        return IMBOPT_OK;
    } catch (...) {
        return map_exception();
    }
}

imbopt_status imbopt_experiment_set_output_dir(imbopt_experiment* e, const char* dir) {
    if (!e || !dir) return record_error(IMBOPT_ERR_INVALID_ARG, "null argument");
    e->config.output_dir = dir;
    return IMBOPT_OK;
}

imbopt_status imbopt_experiment_set_seeds(imbopt_experiment* e, const char* seeds) {
    if (!e || !seeds) return record_error(IMBOPT_ERR_INVALID_ARG, "null argument");
    std::vector<std::uint64_t> parsed;
    const std::string s(seeds);
    std::size_t start = 0;
    try {
        while (start <= s.size()) {
            const std::size_t comma = std::min(s.find(',', start), s.size());
            const std::string tok = s.substr(start, comma - start);
            if (!tok.empty()) parsed.push_back(std::stoull(tok));
            start = comma + 1;
        }
    } catch (const std::exception&) {
        e->error = "seeds must be a comma-separated list of integers, got '" + s + "'";
        return record_error(IMBOPT_ERR_CONFIG, e->error);
    }
    if (parsed.empty()) {
        e->error = "seeds list is empty";
        return record_error(IMBOPT_ERR_CONFIG, e->error);
    }
    e->config.seeds = std::move(parsed);
    return IMBOPT_OK;
}

imbopt_status imbopt_experiment_run(imbopt_experiment* e, int threads) {
    if (!e) return record_error(IMBOPT_ERR_INVALID_ARG, "null handle");
    try {
        e->result = imbopt::exp::run_experiment(e->config, threads);
        e->has_result = true;
        return IMBOPT_OK;
    } catch (...) {
        const imbopt_status st = map_exception();
        e->error = t_last_error;
        return st;
    }
}

size_t imbopt_experiment_seed_count(const imbopt_experiment* e) {
    return e && e->has_result ? e->result.outcomes.size() : 0;
}

imbopt_status imbopt_experiment_seed_result(const imbopt_experiment* e, size_t index,
                                            uint64_t* seed, int* diverged, double* macro_recall,
                                            double* tau, int* mid_present) {
    if (!e || !e->has_result || index >= e->result.outcomes.size())
        return record_error(IMBOPT_ERR_INVALID_ARG, "bad handle or index");
    const auto& oc = e->result.outcomes[index];
    if (seed) *seed = oc.seed;
    if (diverged) *diverged = oc.diverged ? 1 : 0;
    if (macro_recall) *macro_recall = oc.final_macro_test_recall;
    if (tau) *tau = oc.mid.tau;
    if (mid_present) *mid_present = oc.mid.mid_present ? 1 : 0;
    return IMBOPT_OK;
}

const char* imbopt_experiment_error(const imbopt_experiment* e) {
    return e ? e->error.c_str() : "";
}

void imbopt_experiment_destroy(imbopt_experiment* e) { delete e; }

const char* imbopt_battery_names(void) {
    static const std::string names = [] {
        std::string acc;
        for (const auto& n : imbopt::battery::battery_names())
            acc += (acc.empty() ? "" : ",") + n;
        return acc;
    }();
    return names.c_str();
}

imbopt_status imbopt_theory_run(const char* battery, const char* out_csv, uint64_t seed,
                                int quick, size_t* violations) {
    if (!battery || !out_csv) return record_error(IMBOPT_ERR_INVALID_ARG, "null argument");
    try {
        const auto opt = quick ? imbopt::battery::BatteryOptions::quick()
                               : imbopt::battery::BatteryOptions{};
        const auto result = imbopt::battery::run_battery(battery, seed, opt);
        result.write_csv(out_csv);
        if (violations) *violations = result.violations;
        if (result.violations > 0)
            return record_error(IMBOPT_ERR_VIOLATION,
                                "battery '" + result.name + "' reported " +
                                    std::to_string(result.violations) + " violation(s)");
        return IMBOPT_OK;
    } catch (...) {
        return map_exception();
    }
}

imbopt_status imbopt_gen_data(const char* spec_json, uint64_t seed, const char* out_csv,
                              const char* out_manifest) {
    if (!spec_json || !out_csv || !out_manifest)
        return record_error(IMBOPT_ERR_INVALID_ARG, "null argument");
    try {
        // Reuse the experiment config parser for the shared profile schema.
        nlohmann::json spec = nlohmann::json::parse(spec_json);
        nlohmann::json wrapped = {
            {"version", 1},
            {"dataset",
             {{"profile", spec.at("profile")},
              {"dim", spec.at("dim")},
              {"separation", spec.at("separation")}}},
            {"model", nlohmann::json::object()},
            {"algorithm", "gd"},
            {"schedule", {{"kind", "constant"}, {"eta", 0.1}}},
            {"epochs", 0},
        };
        const auto cfg = imbopt::exp::ExperimentConfig::from_json_text(wrapped.dump());
        imbopt::exp::generate_dataset(cfg.profile, cfg.dim, cfg.separation, seed, out_csv,
                                      out_manifest);
        return IMBOPT_OK;
    } catch (const nlohmann::json::exception& e) {
        return record_error(IMBOPT_ERR_CONFIG, std::string("bad dataset spec: ") + e.what());
    } catch (...) {
        return map_exception();
    }
}

}  // extern "C"
