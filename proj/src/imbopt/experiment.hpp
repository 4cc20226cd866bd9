#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "imbopt/dataset.hpp"
#include "imbopt/diagnostics.hpp"
#include "imbopt/model.hpp"
#include "imbopt/optim.hpp"

namespace imbopt::exp {

/// Versioned JSON experiment description (schema version 1).
struct ExperimentConfig {
    data::ImbalanceProfile profile;
    std::size_t dim = 2;
    double separation = 1.0;
    std::uint64_t data_seed = 1;

    model::ModelSpec model;
    optim::TrainConfig train;

    std::string output_dir = ".";
    std::vector<std::uint64_t> seeds = {1};

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_file(const std::string& path);
    void validate() const;
};

struct SeedOutcome {
    std::uint64_t seed = 0;
    bool diverged = false;
    std::size_t divergence_step = 0;
    double final_macro_test_recall = diag::kSentinel;
    double peak_macro_test_recall = diag::kSentinel;
    diag::MidReport mid;
    std::string runlog_path;
};

struct Aggregate {
    double recall_mean = diag::kSentinel;
    double recall_stderr = diag::kSentinel;
    double tau_mean = diag::kSentinel;
    double tau_stderr = diag::kSentinel;
    std::size_t seeds_ok = 0;
    std::size_t seeds_diverged = 0;
    std::size_t seeds_tau_reached = 0;
};

struct ExperimentResult {
    std::vector<SeedOutcome> outcomes;  // in config seed order
    Aggregate aggregate;
    std::string summary_path;
    std::string aggregate_path;
    std::string manifest_path;
};

/// Runs every seed (worker pool bounded by `threads`, or IMBOPT_THREADS when
/// 0), writes one RunLog CSV per seed plus summary.csv, aggregate.csv and
/// manifest.json under the config's output directory.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads = 0);

/// In-memory single-seed run (no files); used by tests and diagnostics.
optim::TrainResult run_single(const ExperimentConfig& cfg, std::uint64_t seed);

/// Dataset CSV + manifest (counts, fractions, seed, stream ids).
void generate_dataset(const data::ImbalanceProfile& profile, std::size_t dim, double separation,
                      std::uint64_t seed, const std::string& csv_path,
                      const std::string& manifest_path);

Aggregate aggregate_outcomes(const std::vector<SeedOutcome>& outcomes);

}  // namespace imbopt::exp
