#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "imbopt/dataset.hpp"
#include "imbopt/diagnostics.hpp"
#include "imbopt/model.hpp"

namespace imbopt::optim {

enum class Algorithm { Gd, Pcngd, Sgd, Pcnsgd, SgdO, PcnsgdO, PcnsgdR };

Algorithm algorithm_from_string(const std::string& s);
std::string to_string(Algorithm a);
bool is_full_batch(Algorithm a);
bool needs_per_class_batches(Algorithm a);  // pcnsgd, pcnsgd_r
bool needs_oversampled_batches(Algorithm a);

struct Schedule {
    enum class Kind { Constant, InvSqrtT, AngleAdaptive, PlDecreasing };

    Kind kind = Kind::Constant;
    double eta = 0.01;    // Constant
    double c = 0.1;       // InvSqrtT: c/sqrt(T); AngleAdaptive: c/((1+cos a) sqrt(T))
    double horizon = 0;   // T; filled with the planned step count when 0
    double c_mu = 1.0;    // PlDecreasing: (2t+1) / (c_mu (t+1)^2)

    static Schedule constant(double eta);
    static Schedule inv_sqrt_t(double c, double horizon = 0);
    static Schedule angle_adaptive(double c, double horizon = 0);
    static Schedule pl_decreasing(double c_mu);

    /// one_plus_cos is only consulted by the angle-adaptive kind.
    double value(std::size_t t, double one_plus_cos = 1.0) const;
};

Schedule schedule_from_string(const std::string& kind, double value, double horizon);

struct StepReport {
    std::vector<std::vector<double>> contributions;  // per class, before the -eta sum
    std::vector<double> step;                        // applied delta: -eta * sum contributions
    int degenerate_classes = 0;
    int clamped_projections = 0;
    bool all_degenerate = false;  // stationary-point signal (PCN rules)
};

/// x -> x - eta * sum_l grads[l].
StepReport gd_step(std::vector<double>& x, double eta,
                   const std::vector<std::vector<double>>& per_class_grads);

/// x -> x - eta * sum_l grads[l]/|grads[l]|; degenerate classes contribute
/// zero and are flagged.
StepReport pcngd_step(std::vector<double>& x, double eta,
                      const std::vector<std::vector<double>>& per_class_grads);

/// Same normalization applied to per-class mini-batch gradients (Alg. 2).
StepReport pcnsgd_step(std::vector<double>& x, double eta,
                       const std::vector<std::vector<double>>& batch_grads);

/// Unnormalized sum of equal-size per-class batch-mean gradients (Alg. 4).
StepReport sgd_oversampled_step(std::vector<double>& x, double eta,
                                const std::vector<std::vector<double>>& batch_grads);

/// PCN on oversampled-equal batches (Alg. 3).
StepReport pcnsgd_o_step(std::vector<double>& x, double eta,
                         const std::vector<std::vector<double>>& batch_grads);

/// Alg. 5: every class contributes g/(p |g|) where p is the cosine between
/// the batch gradient and the cached full-batch per-class gradient, clamped
/// to [p_min, 1] before the division.
StepReport pcnsgd_r_step(std::vector<double>& x, double eta,
                         const std::vector<std::vector<double>>& batch_grads,
                         const std::vector<std::vector<double>>& fbg_cache, double p_min,
                         std::vector<double>* projections = nullptr);

struct TrainConfig {
    Algorithm algorithm = Algorithm::Gd;
    Schedule schedule;
    std::size_t epochs = 1;
    std::size_t eval_interval = 1;
    std::size_t n_batches = 0;       // N_b (sgd, pcnsgd, pcnsgd_r)
    std::size_t per_class_size = 0;  // s (+O algorithms)
    std::size_t fbg_refresh_interval = 5;
    double p_min = 0.05;
    double recall_threshold = 0.7;
    double mid_window_fraction = 0.2;
    double mid_drop_threshold = 0.05;

    void validate() const;  // ConfigError naming the offending fields
};

struct TrainResult {
    diag::RunLog log;
    std::vector<double> final_params;
    std::size_t steps = 0;
};

/// Runs E epochs of the configured algorithm, evaluating diagnostics on the
/// train set and the balanced test split every eval_interval steps (plus the
/// initial and final states). Divergence (non-finite loss) aborts the run; the
/// partial log is returned with the diverged flag set.
TrainResult run_training(const model::ModelSpec& spec, const data::MixtureData& mix,
                         const TrainConfig& cfg, std::uint64_t seed);

}  // namespace imbopt::optim
