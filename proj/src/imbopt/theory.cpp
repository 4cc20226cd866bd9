#include "imbopt/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace imbopt::theory {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Slack for float rounding when comparing a measured lhs against an rhs.
constexpr double kCmpTol = 1e-9;

bool leq_with_tol(double lhs, double rhs) {
    return lhs <= rhs * (1.0 + kCmpTol) + 1e-300;
}

}  // namespace

double QuadraticClass::value(const std::vector<double>& x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < center.size(); ++i) {
        const double d = x[i] - center[i];
        acc += hess_diag[i] * d * d;
    }
    return 0.5 * weight * acc;
}

std::vector<double> QuadraticClass::grad(const std::vector<double>& x) const {
    std::vector<double> g(center.size());
    for (std::size_t i = 0; i < center.size(); ++i)
        g[i] = weight * hess_diag[i] * (x[i] - center[i]);
    return g;
}

double QuadraticClass::smoothness() const {
    double m = 0.0;
    for (double h : hess_diag) m = std::max(m, h);
    return weight * m;
}

QuadraticClass QuadraticClass::isotropic(std::vector<double> center, double curvature,
                                         double weight) {
    QuadraticClass q;
    q.hess_diag.assign(center.size(), curvature);
    q.center = std::move(center);
    q.weight = weight;
    return q;
}

double TwoClassQuadratic::l2() const { return std::max(f0.smoothness(), f1.smoothness()); }

TwoClassQuadratic make_two_class_quadratic(double angle, double norm_ratio, std::size_t dim) {
    if (dim < 2) throw DomainError("make_two_class_quadratic: need dim >= 2");
    if (!(angle > 0.0 && angle <= std::acos(-1.0) + 1e-12))
        throw DomainError("make_two_class_quadratic: angle must lie in (0, pi]");
    if (!(norm_ratio > 0.0)) throw DomainError("make_two_class_quadratic: ratio must be positive");
    // grad at x0 = 0 is -center for unit curvature/weight.
    std::vector<double> g0(dim, 0.0), g1(dim, 0.0);
    g0[0] = 1.0;
    g1[0] = norm_ratio * std::cos(angle);
    g1[1] = norm_ratio * std::sin(angle);
    TwoClassQuadratic q;
    q.f0 = QuadraticClass::isotropic(vec_scale(g0, -1.0), 1.0);
    q.f1 = QuadraticClass::isotropic(vec_scale(g1, -1.0), 1.0);
    return q;
}

std::vector<double> StochasticQuadraticClass::mean_center() const {
    if (mean_cache_.size() == hess_diag.size()) return mean_cache_;
    std::vector<double> m(hess_diag.size(), 0.0);
    for (const auto& c : example_centers) vec_axpy(m, 1.0, c);
    mean_cache_ = vec_scale(m, 1.0 / static_cast<double>(example_centers.size()));
    return mean_cache_;
}

double StochasticQuadraticClass::value(const std::vector<double>& x) const {
    double acc = 0.0;
    for (const auto& c : example_centers) {
        for (std::size_t j = 0; j < hess_diag.size(); ++j) {
            const double d = x[j] - c[j];
            acc += hess_diag[j] * d * d;
        }
    }
    return 0.5 * acc / static_cast<double>(example_centers.size());
}

double StochasticQuadraticClass::min_value() const { return value(mean_center()); }

std::vector<double> StochasticQuadraticClass::grad(const std::vector<double>& x) const {
    const auto m = mean_center();
    std::vector<double> g(hess_diag.size());
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = hess_diag[j] * (x[j] - m[j]);
    return g;
}

std::vector<double> StochasticQuadraticClass::batch_grad(
    const std::vector<double>& x, const std::vector<std::size_t>& idx) const {
    if (idx.empty()) throw DomainError("batch_grad: empty batch");
    std::vector<double> m(hess_diag.size(), 0.0);
    for (std::size_t i : idx) vec_axpy(m, 1.0, example_centers[i]);
    const double inv = 1.0 / static_cast<double>(idx.size());
    std::vector<double> g(hess_diag.size());
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = hess_diag[j] * (x[j] - m[j] * inv);
    return g;
}

double StochasticQuadraticClass::smoothness() const {
    double m = 0.0;
    for (double h : hess_diag) m = std::max(m, h);
    return m;
}

double StochasticTwoClassQuadratic::l2() const {
    return std::max(f0.smoothness(), f1.smoothness());
}

double gd_rhs(const TheoremConstants& k) {
    const double t = static_cast<double>(k.horizon);
    return 2.0 * (1.0 + k.c_max) * k.l2 * k.d0 / (k.omega * k.omega * t) +
           k.d0 / (k.omega * k.c * std::sqrt(t));
}

double gd_alternate_rhs(const TheoremConstants& k) {
    return k.d0 / (k.omega * static_cast<double>(k.horizon + 1));
}

double pcngd_v1_rhs(const TheoremConstants& k) {
    return (k.d0 / k.c + 2.0 * k.l2 * k.c) / (k.omega * std::sqrt(double(k.horizon)));
}

double pcngd_v2_rhs(const TheoremConstants& k) {
    return (k.d0 / k.c + 2.0 * k.l2 * k.c / k.omega) / std::sqrt(double(k.horizon));
}

double rpcngd_rhs(const TheoremConstants& k) { return pcngd_v1_rhs(k); }

double pl_decreasing_rhs(const TheoremConstants& k) {
    return 8.0 * k.l2 / (k.c_mu * k.c_mu * static_cast<double>(k.horizon));
}

double pl_constant_rhs(const TheoremConstants& k) {
    return std::pow(1.0 - k.c, static_cast<double>(k.horizon) - 1.0) * k.d0 +
           2.0 * k.l2 * k.c / (k.c_mu * k.c_mu);
}

double pcnsgd_ball_rhs(const TheoremConstants& k) {
    return pcngd_v1_rhs(k) + k.sigma * (1.0 + 2.0 / k.omega);
}

namespace {

const QuadraticClass& tracked(const TwoClassQuadratic& q, int cls) {
    if (cls != 0 && cls != 1) throw DomainError("class index must be 0 or 1");
    return cls == 0 ? q.f0 : q.f1;
}

const QuadraticClass& other(const TwoClassQuadratic& q, int cls) {
    return cls == 0 ? q.f1 : q.f0;
}

}  // namespace

BoundReport thm_gd_bound_eval(const TwoClassQuadratic& q, int cls,
                              const std::vector<double>& x0, double c, std::size_t horizon) {
    BoundReport rep;
    rep.constants.l2 = q.l2();
    rep.constants.c = c;
    rep.constants.horizon = horizon;
    const auto& fc = tracked(q, cls);
    const auto& fo = other(q, cls);
    rep.constants.d0 = fc.value(x0);

    const double sqrt_t = std::sqrt(static_cast<double>(horizon));
    std::vector<double> x = x0;
    double lhs = kInf, omega_min = kInf, c_max = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) {
        const auto gc = fc.grad(x);
        const auto go = fo.grad(x);
        const double nc = l2_norm(gc);
        const double no = l2_norm(go);
        if (nc <= kNormEpsilon || no <= kNormEpsilon) {
            rep.note = "degenerate per-class gradient at t=" + std::to_string(t);
            return rep;
        }
        lhs = std::min(lhs, nc * nc);
        const double beta = cosine_angle(gc, go);
        const double ct = no / nc;
        const double margin = 1.0 + beta * ct;
        if (margin <= 0.0) {
            rep.note = "Eq.(1) margin nonpositive at t=" + std::to_string(t);
            return rep;
        }
        omega_min = std::min(omega_min, margin);
        c_max = std::max(c_max, ct * ct);
        const double eta =
            std::min(margin / (2.0 * (1.0 + ct * ct) * rep.constants.l2), c / sqrt_t);
        vec_axpy(x, -eta, gc);
        vec_axpy(x, -eta, go);
    }
    rep.hypotheses_ok = true;
    rep.constants.omega = omega_min;
    rep.constants.c_max = c_max;
    rep.lhs = lhs;
    rep.rhs = gd_rhs(rep.constants);
    rep.satisfied = leq_with_tol(rep.lhs, rep.rhs);
    return rep;
}

BoundReport thm_gd_alternate_eval(const TwoClassQuadratic& q, int cls,
                                  const std::vector<double>& x0, std::size_t horizon) {
    BoundReport rep;
    rep.constants.l2 = q.l2();
    rep.constants.horizon = horizon;
    const auto& fc = tracked(q, cls);
    const auto& fo = other(q, cls);
    rep.constants.d0 = fc.value(x0);

    // Initial cap from x0, then shrink until the constant step stays below
    // every per-step cap along its own trajectory.
    auto cap_at = [&](const std::vector<double>& x, bool& ok) {
        const auto gc = fc.grad(x);
        const auto go = fo.grad(x);
        const double nc = l2_norm(gc);
        const double no = l2_norm(go);
        if (nc <= kNormEpsilon || no <= kNormEpsilon) {
            ok = false;
            return 0.0;
        }
        const double beta = cosine_angle(gc, go);
        const double ct = no / nc;
        const double margin = 1.0 + beta * ct;
        if (margin <= 0.0) {
            ok = false;
            return 0.0;
        }
        return margin / (rep.constants.l2 * (1.0 + ct * ct));
    };

    bool ok = true;
    const double margin_floor = 1e-8;
    double eta = 0.5 * cap_at(x0, ok);
    if (!ok || eta <= 0.0) {
        rep.note = "hypotheses violated at x0";
        return rep;
    }
    double lhs = kInf, omega = kInf;
    bool admissible = false;
    // A slower constant step keeps the iterates further from the joint
    // optimum (where the per-class margins collapse), so halving eta
    // eventually yields a trajectory whose angle condition holds up to T.
    for (int attempt = 0; attempt < 200 && !admissible; ++attempt) {
        std::vector<double> x = x0;
        lhs = kInf;
        omega = kInf;
        double min_cap = kInf, min_margin = kInf;
        ok = true;
        for (std::size_t t = 0; t <= horizon; ++t) {
            const auto gc = fc.grad(x);
            const auto go = fo.grad(x);
            const double nc = l2_norm(gc);
            const double no = l2_norm(go);
            if (nc <= kNormEpsilon || no <= kNormEpsilon) {
                ok = false;
                break;
            }
            lhs = std::min(lhs, nc * nc);
            if (t == horizon) break;  // x_T contributes to the min only
            const double beta = cosine_angle(gc, go);
            const double ct = no / nc;
            const double margin = 1.0 + beta * ct;
            min_margin = std::min(min_margin, margin);
            if (margin <= margin_floor) {
                ok = false;
                break;
            }
            min_cap = std::min(min_cap, margin / (rep.constants.l2 * (1.0 + ct * ct)));
            omega = std::min(omega,
                             eta * (margin - rep.constants.l2 * eta * (1.0 + ct * ct)));
            vec_axpy(x, -eta, gc);
            vec_axpy(x, -eta, go);
        }
        if (ok && eta <= min_cap * (1.0 - 1e-9)) {
            admissible = true;
            break;
        }
        eta = ok ? 0.5 * min_cap : 0.5 * eta;
        if (eta <= 1e-300) break;
    }
    if (!admissible) {
        rep.note = "no admissible constant step size found";
        return rep;
    }
    rep.hypotheses_ok = true;
    rep.constants.eta = eta;
    rep.constants.omega = omega;
    rep.lhs = lhs;
    rep.rhs = gd_alternate_rhs(rep.constants);
    rep.satisfied = leq_with_tol(rep.lhs, rep.rhs);
    return rep;
}

BoundReport thm_pcngd_bound_eval(const TwoClassQuadratic& q, int cls,
                                 const std::vector<double>& x0, double c, std::size_t horizon,
                                 PcngdVariant variant) {
    BoundReport rep;
    rep.constants.l2 = q.l2();
    rep.constants.c = c;
    rep.constants.horizon = horizon;
    const auto& fc = tracked(q, cls);
    const auto& fo = other(q, cls);
    rep.constants.d0 = fc.value(x0);

    const double sqrt_t = std::sqrt(static_cast<double>(horizon));
    std::vector<double> x = x0;
    double lhs = kInf, min_opc = kInf;
    for (std::size_t t = 0; t < horizon; ++t) {
        const auto gc = fc.grad(x);
        const auto go = fo.grad(x);
        const double nc = l2_norm(gc);
        const double no = l2_norm(go);
        if (nc <= kNormEpsilon || no <= kNormEpsilon) {
            rep.note = "degenerate per-class gradient at t=" + std::to_string(t);
            return rep;
        }
        const double opc = 1.0 + cosine_angle(gc, go);
        if (opc <= 0.0) {
            rep.note = "opposed gradients at t=" + std::to_string(t);
            return rep;
        }
        lhs = std::min(lhs, nc);
        min_opc = std::min(min_opc, opc);
        const double eta = variant == PcngdVariant::V1 ? c / sqrt_t : c / (opc * sqrt_t);
        vec_axpy(x, -eta / nc, gc);
        vec_axpy(x, -eta / no, go);
    }
    rep.hypotheses_ok = true;
    rep.lhs = lhs;
    if (variant == PcngdVariant::V1) {
        rep.constants.omega = min_opc;
        rep.rhs = pcngd_v1_rhs(rep.constants);
    } else {
        rep.constants.omega = min_opc * min_opc;
        rep.rhs = pcngd_v2_rhs(rep.constants);
    }
    rep.satisfied = leq_with_tol(rep.lhs, rep.rhs);
    return rep;
}

RpcngdReport thm_rpcngd_check(const TwoClassQuadratic& q, int cls, const std::vector<double>& x0,
                              double c, std::size_t horizon, std::size_t n_draws,
                              SeededRng& rng) {
    RpcngdReport rep;
    rep.constants.l2 = q.l2();
    rep.constants.c = c;
    rep.constants.horizon = horizon;
    const auto& fc = tracked(q, cls);
    const auto& fo = other(q, cls);
    rep.constants.d0 = fc.value(x0);

    const double sqrt_t = std::sqrt(static_cast<double>(horizon));
    const double eta = c / sqrt_t;
    std::vector<double> x = x0;
    std::vector<double> omegas(horizon), norms(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
        const auto gc = fc.grad(x);
        const auto go = fo.grad(x);
        const double nc = l2_norm(gc);
        const double no = l2_norm(go);
        if (nc <= kNormEpsilon || no <= kNormEpsilon) return rep;
        const double opc = 1.0 + cosine_angle(gc, go);
        if (opc <= 0.0) return rep;
        omegas[t] = opc;
        norms[t] = nc;
        vec_axpy(x, -eta / nc, gc);
        vec_axpy(x, -eta / no, go);
    }
    rep.hypotheses_ok = true;
    double omega_sum = 0.0;
    for (double w : omegas) omega_sum += w;
    const double omega_bar = omega_sum / static_cast<double>(horizon);
    rep.constants.omega = omega_bar;
    for (std::size_t t = 0; t < horizon; ++t)
        rep.exact_expectation += omegas[t] / omega_sum * norms[t];
    rep.rhs = rpcngd_rhs(rep.constants);

    // Monte-Carlo estimate of E|grad f(x_R)| by inverse-CDF sampling of P_R.
    std::vector<double> cdf(horizon);
    double acc = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) {
        acc += omegas[t] / omega_sum;
        cdf[t] = acc;
    }
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t k = 0; k < n_draws; ++k) {
        const double u = rng.uniform01();
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        const std::size_t t = std::min<std::size_t>(
            static_cast<std::size_t>(it - cdf.begin()), horizon - 1);
        sum += norms[t];
        sum_sq += norms[t] * norms[t];
    }
    const double n = static_cast<double>(n_draws);
    rep.mc_estimate = sum / n;
    rep.mc_stderr = std::sqrt(std::max(0.0, sum_sq / n - rep.mc_estimate * rep.mc_estimate) / n);
    rep.satisfied = leq_with_tol(rep.exact_expectation, rep.rhs);
    return rep;
}

BoundReport thm_pl_rate_check(const TwoClassQuadratic& q, int cls, const std::vector<double>& x0,
                              double mu, std::size_t horizon, PlMode mode, double constant_c) {
    BoundReport rep;
    rep.constants.l2 = q.l2();
    rep.constants.mu = mu;
    rep.constants.horizon = horizon;
    const auto& fc = tracked(q, cls);
    const auto& fo = other(q, cls);
    rep.constants.d0 = fc.value(x0);
    if (mode == PlMode::Constant && !(constant_c > 0.0 && constant_c < 1.0))
        throw DomainError("thm_pl_rate_check: constant-step c must lie in (0,1)");

    // class-GD must hold for both classes at every visited point.
    auto class_gd_ok = [&](const std::vector<double>& x) {
        const double tol = 1e-12;
        const double v0 = q.f0.value(x), v1 = q.f1.value(x);
        return 0.5 * l2_norm(q.f0.grad(x)) >= mu * std::abs(v0) * (1.0 - tol) - tol &&
               0.5 * l2_norm(q.f1.grad(x)) >= mu * std::abs(v1) * (1.0 - tol) - tol;
    };

    {
        const auto gc = fc.grad(x0);
        const auto go = fo.grad(x0);
        if (l2_norm(gc) <= kNormEpsilon || l2_norm(go) <= kNormEpsilon) {
            rep.note = "degenerate gradient at x0";
            return rep;
        }
        rep.constants.c_mu = mu * (1.0 + cosine_angle(gc, go));  // half of 2 mu (1+cos) as slack
    }

    double final_gap = 0.0;
    bool consistent = false;
    for (int attempt = 0; attempt < 30 && !consistent; ++attempt) {
        std::vector<double> x = x0;
        double omega_hat = kInf;
        for (std::size_t t = 0; t < horizon; ++t) {
            if (!class_gd_ok(x)) {
                rep.note = "class-GD violated along trajectory";
                return rep;
            }
            const auto gc = fc.grad(x);
            const auto go = fo.grad(x);
            const double nc = l2_norm(gc);
            const double no = l2_norm(go);
            // Near-zero per-class gradients signal convergence onto the shared
            // minimizer; those classes contribute nothing this step and the
            // angle condition is vacuous there.
            if (nc > kNormEpsilon && no > kNormEpsilon) {
                const double opc = 1.0 + cosine_angle(gc, go);
                if (opc <= 0.0) {
                    rep.note = "opposed gradients along trajectory";
                    return rep;
                }
                omega_hat = std::min(omega_hat, 2.0 * mu * opc);
            }
            const double td = static_cast<double>(t);
            const double eta = mode == PlMode::Decreasing
                                   ? (2.0 * td + 1.0) / (rep.constants.c_mu * (td + 1.0) * (td + 1.0))
                                   : constant_c / rep.constants.c_mu;
            if (nc > kNormEpsilon) vec_axpy(x, -eta / nc, gc);
            if (no > kNormEpsilon) vec_axpy(x, -eta / no, go);
        }
        if (!class_gd_ok(x)) {
            rep.note = "class-GD violated at x_T";
            return rep;
        }
        if (omega_hat >= rep.constants.c_mu * (1.0 - 1e-12)) {
            consistent = true;
            final_gap = fc.value(x);
        } else {
            rep.constants.c_mu = 0.9 * omega_hat;
        }
    }
    if (!consistent) {
        rep.note = "no self-consistent schedule constant";
        return rep;
    }
    rep.hypotheses_ok = true;
    rep.constants.omega = rep.constants.c_mu;
    rep.lhs = final_gap;
    if (mode == PlMode::Decreasing) {
        rep.rhs = pl_decreasing_rhs(rep.constants);
    } else {
        rep.constants.c = constant_c;
        rep.rhs = pl_constant_rhs(rep.constants);
    }
    rep.satisfied = leq_with_tol(rep.lhs, rep.rhs);
    return rep;
}

BoundReport thm_pcnsgd_ball_check(const StochasticTwoClassQuadratic& q, int cls,
                                  const std::vector<double>& x0, double c, std::size_t horizon,
                                  std::size_t n_seeds, SeededRng& rng) {
    BoundReport rep;
    rep.constants.l2 = q.l2();
    rep.constants.c = c;
    rep.constants.horizon = horizon;
    const auto& fc = cls == 0 ? q.f0 : q.f1;
    const auto& fo = cls == 0 ? q.f1 : q.f0;
    if (cls != 0 && cls != 1) throw DomainError("class index must be 0 or 1");
    rep.constants.d0 = fc.value(x0) - fc.min_value();

    const double sqrt_t = std::sqrt(static_cast<double>(horizon));
    const double eta = c / sqrt_t;
    const std::size_t n0 = q.f0.example_centers.size();
    const std::size_t n1 = q.f1.example_centers.size();

    std::vector<double> mean_norm(horizon, 0.0);
    double omega = kInf;
    std::vector<std::vector<double>> sigma_points;
    const std::size_t snap_every = std::max<std::size_t>(1, horizon / 10);

    for (std::size_t s = 0; s < n_seeds; ++s) {
        SeededRng seed_rng = rng.split(s);
        std::vector<double> x = x0;
        for (std::size_t t = 0; t < horizon; ++t) {
            const auto gc_full = fc.grad(x);
            const auto go_full = fo.grad(x);
            const double ncf = l2_norm(gc_full);
            const double nof = l2_norm(go_full);
            mean_norm[t] += ncf;
            if (ncf > kNormEpsilon && nof > kNormEpsilon) {
                const double opc = 1.0 + cosine_angle(gc_full, go_full);
                if (opc <= 0.0) {
                    rep.note = "opposed full gradients";
                    return rep;
                }
                omega = std::min(omega, opc);
            }
            if (s == 0 && t % snap_every == 0 && sigma_points.size() < 10)
                sigma_points.push_back(x);
            const auto b0 = sample_without_replacement(seed_rng, n0, q.batch0);
            const auto b1 = sample_without_replacement(seed_rng, n1, q.batch1);
            const auto g0 = q.f0.batch_grad(x, b0);
            const auto g1 = q.f1.batch_grad(x, b1);
            const double m0 = l2_norm(g0);
            const double m1 = l2_norm(g1);
            if (m0 <= kNormEpsilon || m1 <= kNormEpsilon) {
                rep.note = "degenerate batch gradient";
                return rep;
            }
            vec_axpy(x, -eta / m0, g0);
            vec_axpy(x, -eta / m1, g1);
        }
    }
    if (!std::isfinite(omega) || omega <= 0.0) {
        rep.note = "no usable angle observations";
        return rep;
    }

    // sigma: empirical max deviation of the class-cls batch gradient from its
    // full-class gradient, 100 draws at each of <= 10 trajectory points.
    SeededRng sigma_rng = rng.split(0x5157ULL);
    const auto& fsel = cls == 0 ? q.f0 : q.f1;
    const std::size_t nsel = cls == 0 ? n0 : n1;
    const std::size_t bsel = cls == 0 ? q.batch0 : q.batch1;
    double sigma = 0.0;
    for (const auto& x : sigma_points) {
        const auto full = fsel.grad(x);
        for (int k = 0; k < 100; ++k) {
            const auto idx = sample_without_replacement(sigma_rng, nsel, bsel);
            sigma = std::max(sigma, l2_norm(vec_sub(full, fsel.batch_grad(x, idx))));
        }
    }
    rep.constants.sigma = sigma;
    rep.constants.omega = omega;

    double lhs = kInf;
    for (double v : mean_norm) lhs = std::min(lhs, v / static_cast<double>(n_seeds));
    rep.hypotheses_ok = true;
    rep.lhs = lhs;
    rep.rhs = pcnsgd_ball_rhs(rep.constants);
    rep.satisfied = leq_with_tol(rep.lhs, rep.rhs);
    return rep;
}

MulticlassCondition multiclass_condition_check(const std::vector<std::vector<double>>& grads,
                                               std::size_t l) {
    if (l >= grads.size()) throw DomainError("multiclass_condition_check: unknown class");
    if (grads.size() < 2) throw DomainError("multiclass_condition_check: need >= 2 classes");
    MulticlassCondition out;
    const double nl = l2_norm(grads[l]);
    if (nl <= kNormEpsilon) {
        out.degenerate = true;
        return out;
    }
    std::vector<double> rest(grads[l].size(), 0.0);
    std::vector<double> rest_normalized(grads[l].size(), 0.0);
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (i == l) continue;
        const double ni = l2_norm(grads[i]);
        if (ni <= kNormEpsilon) {
            out.degenerate = true;
            return out;
        }
        vec_axpy(rest, 1.0, grads[i]);
        vec_axpy(rest_normalized, 1.0 / ni, grads[i]);
    }
    const double nr = l2_norm(rest);
    const double nrn = l2_norm(rest_normalized);
    out.c_t = nr / nl;
    out.c_tilde = nrn;
    out.cos_gd = nr > kNormEpsilon ? cosine_angle(grads[l], rest) : 0.0;
    out.cos_pcngd = nrn > kNormEpsilon ? cosine_angle(grads[l], rest_normalized) : 0.0;
    out.margin_gd = 1.0 + out.cos_gd * out.c_t;
    out.margin_pcngd = 1.0 + out.cos_pcngd * out.c_tilde;
    return out;
}

namespace {

double shared_curvature(const TwoClassQuadratic& q) {
    const double l = q.f0.weight * q.f0.hess_diag.front();
    for (double h : q.f0.hess_diag)
        if (std::abs(q.f0.weight * h - l) > 1e-12 * std::abs(l))
            throw DomainError("tightness: Hessian must be constant diagonal");
    for (double h : q.f1.hess_diag)
        if (std::abs(q.f1.weight * h - l) > 1e-12 * std::abs(l))
            throw DomainError("tightness: both classes must share the curvature");
    return l;
}

}  // namespace

TightnessStep tightness_step(const TwoClassQuadratic& q, int cls, const std::vector<double>& x,
                             double eta) {
    const double L = shared_curvature(q);
    const auto& fc = tracked(q, cls);
    const auto& fo = other(q, cls);
    const auto gc = fc.grad(x);
    const auto go = fo.grad(x);
    const double nc = l2_norm(gc);
    const double no = l2_norm(go);
    if (nc <= kNormEpsilon || no <= kNormEpsilon)
        throw DomainError("tightness_step: degenerate gradient");
    const double beta = cosine_angle(gc, go);
    const double ct = no / nc;

    TightnessStep out;
    out.margin = 1.0 + beta * ct;
    out.bracket = 1.0 - L * eta / 2.0 - L * eta * ct * ct / 2.0 + (1.0 - L * eta) * beta * ct;
    out.predicted = -eta * out.bracket * nc * nc;
    std::vector<double> x_next = x;
    vec_axpy(x_next, -eta, gc);
    vec_axpy(x_next, -eta, go);
    out.measured = fc.value(x_next) - fc.value(x);
    out.rel_err = std::abs(out.predicted - out.measured) / (std::abs(out.measured) + 1e-300);
    return out;
}

double tightness_threshold_eta(const TwoClassQuadratic& q, int cls,
                               const std::vector<double>& x) {
    const double L = shared_curvature(q);
    const auto& fc = tracked(q, cls);
    const auto& fo = other(q, cls);
    const auto gc = fc.grad(x);
    const auto go = fo.grad(x);
    const double beta = cosine_angle(gc, go);
    const double ct = l2_norm(go) / l2_norm(gc);
    const double margin = 1.0 + beta * ct;
    if (margin <= 0.0)
        throw DomainError("tightness_threshold_eta: loss increases for every step size");
    return 2.0 * margin / (L * (1.0 + 2.0 * beta * ct + ct * ct));
}

}  // namespace imbopt::theory
