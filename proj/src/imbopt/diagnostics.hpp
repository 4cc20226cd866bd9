#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "imbopt/model.hpp"
#include "imbopt/rng.hpp"

namespace imbopt::diag {

inline constexpr double kSentinel = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kTauNever = std::numeric_limits<double>::infinity();

/// One evaluation checkpoint of a training run.
struct RunLogRow {
    std::size_t t = 0;
    double eta = 0.0;
    std::vector<double> loss_train, loss_test;
    std::vector<double> recall_train, recall_test;
    std::vector<double> grad_norm;  // per-class FBG norms, dataset-size convention
    double cos_alpha = kSentinel;   // binary: angle(g0, g1); multiclass: worst class vs rest
    double c_t = kSentinel;         // matching norm ratio
    double eq1_margin = kSentinel;  // 1 + cos_alpha * c_t
    int degenerate_flags = 0;       // step events since the previous row
    int clamp_flags = 0;

    double macro_recall_train() const;
    double macro_recall_test() const;
};

struct RunLog {
    std::size_t classes = 0;
    std::vector<RunLogRow> rows;
    bool diverged = false;
    std::size_t divergence_step = 0;

    /// Fixed column layout: t, eta, per-class blocks
    /// (loss_train_l, loss_test_l, recall_train_l, recall_test_l, gradnorm_l),
    /// pair metrics (cos_alpha, c_t, eq1_margin), flags.
    void write_csv(std::ostream& os) const;
    std::vector<std::string> csv_header() const;
};

/// Multiclass rest-vs-class ratio C_t^(l) = |sum_{i != l} g_i| / |g_l|;
/// reduces to the binary C_t at L = 2. Sentinel (NaN) when degenerate.
double gradient_ratio(const model::PerClassGradients& g, std::size_t l);

/// Eq-(1)-style margin 1 + cos(alpha) * C_t.
double gd_monotonicity_margin(double cos_alpha, double c_t);

struct RecallMetrics {
    std::vector<double> per_class;  // NaN for empty classes
    double macro = 0.0;             // unweighted mean over nonempty classes
    int empty_classes = 0;
};

RecallMetrics recall_metrics(const std::vector<int>& predictions, const std::vector<int>& labels,
                             std::size_t classes);

struct MidReport {
    bool mid_present = false;
    double mid_depth = 0.0;          // max recall drop below the initial value
    std::size_t mid_duration = 0;    // steps from first sub-threshold eval to recovery
    bool recovered = false;
    double tau = kTauNever;          // first step with macro test recall >= R*
    double tau_uncertainty = 0.0;    // one eval interval
};

/// Window = number of leading evaluations inspected for the drop.
MidReport detect_mid(const RunLog& log, std::size_t minority_class, std::size_t window_evals,
                     double drop_threshold, double recall_threshold);

struct CltCheck {
    double predicted = kSentinel;
    double measured = kSentinel;
    double stderr_measured = kSentinel;
    double mean_attenuation = kSentinel;  // E[|Z|^2 sin^2(theta)] / (2 n~ |G|^2)
    std::size_t draws = 0;
};

/// Monte-Carlo check of the projection expansion: draws Z ~ N(0, diag(cov)),
/// forms g^ = fbg + Z/sqrt(n_tilde), and compares the measured mean cosine
/// against 1 - |Z|^2 sin^2(theta) / (2 n~ |fbg|^2) averaged over the draws.
CltCheck clt_projection_check(const std::vector<double>& fbg,
                              const std::vector<double>& noise_cov_diag, std::size_t n_tilde,
                              std::size_t draws, SeededRng& rng);

struct RescalingFactor {
    double alpha = 1.0;
    bool clamped = false;
};

/// alpha = (1 - attenuation_majority) / (1 - attenuation_minority); terms
/// are floored at 0.05 (flagged) when nonpositive.
RescalingFactor rescaling_factor(double attenuation_majority, double attenuation_minority);

struct FixedPointRatio {
    double cosine = kSentinel;
    double gamma = kSentinel;  // |g0| / |g1|
    bool degenerate = false;
};

FixedPointRatio fixed_point_ratio(const std::vector<double>& g0, const std::vector<double>& g1);

}  // namespace imbopt::diag
