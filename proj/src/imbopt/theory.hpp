#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "imbopt/rng.hpp"
#include "imbopt/tensor.hpp"

namespace imbopt::theory {

/// f(x) = (weight/2) (x - center)^T diag(hess) (x - center); analytic
/// gradient weight * hess o (x - center), minimum 0 at the center.
struct QuadraticClass {
    std::vector<double> center;
    std::vector<double> hess_diag;
    double weight = 1.0;

    double value(const std::vector<double>& x) const;
    std::vector<double> grad(const std::vector<double>& x) const;
    double smoothness() const;  // weight * max hess_diag
    static QuadraticClass isotropic(std::vector<double> center, double curvature,
                                    double weight = 1.0);
};

struct TwoClassQuadratic {
    QuadraticClass f0, f1;
    std::size_t dim() const { return f0.center.size(); }
    double l2() const;  // max of the two smoothness constants
};

/// Instance whose per-class gradients at x0 = 0 have exactly the requested
/// angle (radians, in (0, pi]) and norm ratio |g1|/|g0|; unit curvature.
TwoClassQuadratic make_two_class_quadratic(double angle, double norm_ratio, std::size_t dim);

/// Per-class finite sums: example i of class l is a quadratic centered at
/// example_centers[i] with the shared diagonal Hessian. The class loss is the
/// mean over its examples, so mini-batch gradients are noisy estimates of the
/// full-class gradient.
struct StochasticQuadraticClass {
    std::vector<std::vector<double>> example_centers;
    std::vector<double> hess_diag;

    std::vector<double> mean_center() const;  // cached after the first call
    double value(const std::vector<double>& x) const;
    double min_value() const;
    std::vector<double> grad(const std::vector<double>& x) const;
    std::vector<double> batch_grad(const std::vector<double>& x,
                                   const std::vector<std::size_t>& idx) const;
    double smoothness() const;

private:
    mutable std::vector<double> mean_cache_;
};

struct StochasticTwoClassQuadratic {
    StochasticQuadraticClass f0, f1;
    std::size_t batch0 = 1, batch1 = 1;  // per-class mini-batch sizes
    double l2() const;
};

/// Everything a bound's right-hand side can consume. omega is the
/// per-theorem trajectory constant (named omega_min / omega_max / omega_bar
/// in the respective statements).
struct TheoremConstants {
    double l1 = 0.0;  // recorded only; appears in no bound expression
    double l2 = 0.0;
    double mu = 0.0;
    double c = 0.0;
    std::size_t horizon = 0;
    double d0 = 0.0;
    double omega = 0.0;
    double c_max = 0.0;
    double c_mu = 0.0;
    double sigma = 0.0;
    double eta = 0.0;  // constant-step variants
};

struct BoundReport {
    double lhs = 0.0;
    double rhs = 0.0;
    bool satisfied = false;
    bool hypotheses_ok = false;
    std::string note;
    TheoremConstants constants;
};

// Right-hand sides as pure functions of the constants (omega is the
// trajectory constant of the respective statement).
double gd_rhs(const TheoremConstants& k);
double gd_alternate_rhs(const TheoremConstants& k);
double pcngd_v1_rhs(const TheoremConstants& k);
double pcngd_v2_rhs(const TheoremConstants& k);
double rpcngd_rhs(const TheoremConstants& k);     // omega = mean over steps
double pl_decreasing_rhs(const TheoremConstants& k);
double pl_constant_rhs(const TheoremConstants& k);
double pcnsgd_ball_rhs(const TheoremConstants& k);

/// GD with the theorem step rule
/// eta_t = min((1 + cos(a_t) C_t) / (2 (1 + C_t^2) L2), c / sqrt(T)) for the
/// tracked class; lhs = min_t |grad f^(cls)|^2 over [0, T-1].
BoundReport thm_gd_bound_eval(const TwoClassQuadratic& q, int cls,
                              const std::vector<double>& x0, double c, std::size_t horizon);

/// GD with a constant step size chosen below every per-step cap
/// (1 + cos(a_t) C_t) / (L2 (1 + C_t^2)); lhs over [0, T].
BoundReport thm_gd_alternate_eval(const TwoClassQuadratic& q, int cls,
                                  const std::vector<double>& x0, std::size_t horizon);

enum class PcngdVariant { V1, V2 };  // c/sqrt(T) vs c/((1+cos a) sqrt(T))

BoundReport thm_pcngd_bound_eval(const TwoClassQuadratic& q, int cls,
                                 const std::vector<double>& x0, double c, std::size_t horizon,
                                 PcngdVariant variant);

struct RpcngdReport {
    double exact_expectation = 0.0;  // sum_t P_R(t) |grad f(x_t)|
    double mc_estimate = 0.0;
    double mc_stderr = 0.0;
    double rhs = 0.0;
    bool satisfied = false;
    bool hypotheses_ok = false;
    TheoremConstants constants;
};

RpcngdReport thm_rpcngd_check(const TwoClassQuadratic& q, int cls, const std::vector<double>& x0,
                              double c, std::size_t horizon, std::size_t n_draws, SeededRng& rng);

enum class PlMode { Decreasing, Constant };

/// Class-GD rate check on a trajectory-verified instance. The schedule
/// constant C_mu is found self-consistently: it must stay below the measured
/// min_t 2 mu (1 + cos a_t) of the trajectory it generates. mu is the
/// gradient-dominance constant for the tracked class.
BoundReport thm_pl_rate_check(const TwoClassQuadratic& q, int cls, const std::vector<double>& x0,
                              double mu, std::size_t horizon, PlMode mode,
                              double constant_c = 0.5);

BoundReport thm_pcnsgd_ball_check(const StochasticTwoClassQuadratic& q, int cls,
                                  const std::vector<double>& x0, double c, std::size_t horizon,
                                  std::size_t n_seeds, SeededRng& rng);

struct MulticlassCondition {
    double cos_gd = 0.0;      // angle(g_l, sum_{i != l} g_i)
    double c_t = 0.0;         // |sum_{i != l} g_i| / |g_l|
    double margin_gd = 0.0;   // 1 + cos_gd * c_t
    double cos_pcngd = 0.0;   // angle(g_l, sum_{i != l} g_i/|g_i|)
    double c_tilde = 0.0;     // |sum_{i != l} g_i/|g_i||
    double margin_pcngd = 0.0;
    bool degenerate = false;
};

MulticlassCondition multiclass_condition_check(const std::vector<std::vector<double>>& grads,
                                               std::size_t l);

/// One GD step on a constant-diagonal-Hessian pair (both classes share the
/// curvature L): measured per-class change vs the exact expansion
/// -eta (1 - L eta/2 - L eta C^2/2 + (1 - L eta) cos(a) C) |g|^2
/// for the tracked class.
struct TightnessStep {
    double predicted = 0.0;
    double measured = 0.0;
    double bracket = 0.0;  // decrease iff positive
    double margin = 0.0;   // 1 + cos(a) C
    double rel_err = 0.0;  // against the loss scale
};

TightnessStep tightness_step(const TwoClassQuadratic& q, int cls, const std::vector<double>& x,
                             double eta);

/// Step-size threshold at which the tracked class's one-step change flips
/// sign (requires margin > 0; the change increases for every eta otherwise).
double tightness_threshold_eta(const TwoClassQuadratic& q, int cls, const std::vector<double>& x);

}  // namespace imbopt::theory
