#include "imbopt/optim.hpp"

#include <algorithm>
#include <cmath>

namespace imbopt::optim {

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "gd") return Algorithm::Gd;
    if (s == "pcngd") return Algorithm::Pcngd;
    if (s == "sgd") return Algorithm::Sgd;
    if (s == "pcnsgd") return Algorithm::Pcnsgd;
    if (s == "sgd_o") return Algorithm::SgdO;
    if (s == "pcnsgd_o") return Algorithm::PcnsgdO;
    if (s == "pcnsgd_r") return Algorithm::PcnsgdR;
    throw ConfigError("unknown algorithm: " + s);
}

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Gd: return "gd";
        case Algorithm::Pcngd: return "pcngd";
        case Algorithm::Sgd: return "sgd";
        case Algorithm::Pcnsgd: return "pcnsgd";
        case Algorithm::SgdO: return "sgd_o";
        case Algorithm::PcnsgdO: return "pcnsgd_o";
        case Algorithm::PcnsgdR: return "pcnsgd_r";
    }
    return "?";
}

bool is_full_batch(Algorithm a) { return a == Algorithm::Gd || a == Algorithm::Pcngd; }

bool needs_per_class_batches(Algorithm a) {
    return a == Algorithm::Pcnsgd || a == Algorithm::PcnsgdR;
}

bool needs_oversampled_batches(Algorithm a) {
    return a == Algorithm::SgdO || a == Algorithm::PcnsgdO;
}

Schedule Schedule::constant(double eta) {
    Schedule s;
    s.kind = Kind::Constant;
    s.eta = eta;
    return s;
}

Schedule Schedule::inv_sqrt_t(double c, double horizon) {
    Schedule s;
    s.kind = Kind::InvSqrtT;
    s.c = c;
    s.horizon = horizon;
    return s;
}

Schedule Schedule::angle_adaptive(double c, double horizon) {
    Schedule s;
    s.kind = Kind::AngleAdaptive;
    s.c = c;
    s.horizon = horizon;
    return s;
}

Schedule Schedule::pl_decreasing(double c_mu) {
    Schedule s;
    s.kind = Kind::PlDecreasing;
    s.c_mu = c_mu;
    return s;
}

double Schedule::value(std::size_t t, double one_plus_cos) const {
    switch (kind) {
        case Kind::Constant:
            return eta;
        case Kind::InvSqrtT:
            return c / std::sqrt(std::max(horizon, 1.0));
        case Kind::AngleAdaptive: {
            const double opc = (std::isfinite(one_plus_cos) && one_plus_cos > 0.0)
                                   ? one_plus_cos
                                   : 1.0;
            return c / (opc * std::sqrt(std::max(horizon, 1.0)));
        }
        case Kind::PlDecreasing: {
            const double td = static_cast<double>(t);
            return (2.0 * td + 1.0) / (c_mu * (td + 1.0) * (td + 1.0));
        }
    }
    return eta;
}

Schedule schedule_from_string(const std::string& kind, double value, double horizon) {
    if (kind == "constant") return Schedule::constant(value);
    if (kind == "inv_sqrt_t") return Schedule::inv_sqrt_t(value, horizon);
    if (kind == "angle_adaptive") return Schedule::angle_adaptive(value, horizon);
    if (kind == "pl_decreasing") return Schedule::pl_decreasing(value);
    throw ConfigError("unknown schedule kind: " + kind);
}

namespace {

StepReport apply_contributions(std::vector<double>& x, double eta,
                               std::vector<std::vector<double>> contributions) {
    StepReport rep;
    rep.step.assign(x.size(), 0.0);
    for (const auto& c : contributions) vec_axpy(rep.step, -eta, c);
    vec_axpy(x, 1.0, rep.step);
    rep.contributions = std::move(contributions);
    return rep;
}

std::vector<std::vector<double>> normalized_contributions(
    const std::vector<std::vector<double>>& grads, int& degenerate, bool& all_degenerate) {
    std::vector<std::vector<double>> out;
    out.reserve(grads.size());
    degenerate = 0;
    for (const auto& g : grads) {
        const double n = l2_norm(g);
        if (n <= kNormEpsilon) {
            out.emplace_back(g.size(), 0.0);
            ++degenerate;
        } else {
            out.push_back(vec_scale(g, 1.0 / n));
        }
    }
    all_degenerate = degenerate == static_cast<int>(grads.size());
    return out;
}

}  // namespace

StepReport gd_step(std::vector<double>& x, double eta,
                   const std::vector<std::vector<double>>& per_class_grads) {
    return apply_contributions(x, eta, per_class_grads);
}

StepReport pcngd_step(std::vector<double>& x, double eta,
                      const std::vector<std::vector<double>>& per_class_grads) {
    int degenerate = 0;
    bool all_degenerate = false;
    auto contributions = normalized_contributions(per_class_grads, degenerate, all_degenerate);
    StepReport rep = apply_contributions(x, eta, std::move(contributions));
    rep.degenerate_classes = degenerate;
    rep.all_degenerate = all_degenerate;
    return rep;
}

StepReport pcnsgd_step(std::vector<double>& x, double eta,
                       const std::vector<std::vector<double>>& batch_grads) {
    return pcngd_step(x, eta, batch_grads);
}

StepReport sgd_oversampled_step(std::vector<double>& x, double eta,
                                const std::vector<std::vector<double>>& batch_grads) {
    return gd_step(x, eta, batch_grads);
}

StepReport pcnsgd_o_step(std::vector<double>& x, double eta,
                         const std::vector<std::vector<double>>& batch_grads) {
    return pcngd_step(x, eta, batch_grads);
}

StepReport pcnsgd_r_step(std::vector<double>& x, double eta,
                         const std::vector<std::vector<double>>& batch_grads,
                         const std::vector<std::vector<double>>& fbg_cache, double p_min,
                         std::vector<double>* projections) {
    if (batch_grads.size() != fbg_cache.size())
        throw DimensionError("pcnsgd_r_step: cache/batch class count mismatch");
    StepReport rep;
    std::vector<std::vector<double>> contributions;
    contributions.reserve(batch_grads.size());
    if (projections) projections->assign(batch_grads.size(), 1.0);
    for (std::size_t l = 0; l < batch_grads.size(); ++l) {
        const double n = l2_norm(batch_grads[l]);
        if (n <= kNormEpsilon) {
            contributions.emplace_back(batch_grads[l].size(), 0.0);
            ++rep.degenerate_classes;
            continue;
        }
        double p = 1.0;
        if (l2_norm(fbg_cache[l]) > kNormEpsilon)
            p = cosine_angle(batch_grads[l], fbg_cache[l]);
        else
            ++rep.degenerate_classes;
        if (projections) (*projections)[l] = p;
        if (p < p_min || p > 1.0) {
            p = std::clamp(p, p_min, 1.0);
            ++rep.clamped_projections;
        }
        contributions.push_back(vec_scale(batch_grads[l], 1.0 / (p * n)));
    }
    rep.all_degenerate = rep.degenerate_classes == static_cast<int>(batch_grads.size());
    const int degenerate = rep.degenerate_classes;
    const int clamped = rep.clamped_projections;
    StepReport applied = apply_contributions(x, eta, std::move(contributions));
    applied.degenerate_classes = degenerate;
    applied.clamped_projections = clamped;
    applied.all_degenerate = rep.all_degenerate;
    return applied;
}

void TrainConfig::validate() const {
    const std::string alg = to_string(algorithm);
    if (is_full_batch(algorithm)) {
        if (n_batches != 0)
            throw ConfigError("algorithm '" + alg + "' is full-batch but 'batch.n_b' was set");
        if (per_class_size != 0)
            throw ConfigError("algorithm '" + alg +
                              "' is full-batch but 'batch.per_class_size' was set");
    } else if (needs_oversampled_batches(algorithm)) {
        if (per_class_size == 0)
            throw ConfigError("algorithm '" + alg + "' requires 'batch.per_class_size'");
        if (n_batches != 0)
            throw ConfigError("algorithm '" + alg +
                              "' uses 'batch.per_class_size', not 'batch.n_b'");
    } else {
        if (n_batches == 0)
            throw ConfigError("algorithm '" + alg + "' requires 'batch.n_b'");
        if (per_class_size != 0)
            throw ConfigError("algorithm '" + alg + "' uses 'batch.n_b', not 'batch.per_class_size'");
    }
    if (eval_interval == 0) throw ConfigError("eval_interval must be >= 1");
    if (!(p_min > 0.0 && p_min <= 1.0)) throw ConfigError("p_min must lie in (0, 1]");
    if (!(mid_window_fraction > 0.0 && mid_window_fraction <= 1.0))
        throw ConfigError("mid.window_fraction must lie in (0, 1]");
    if (mid_drop_threshold < 0.0) throw ConfigError("mid.drop_threshold must be >= 0");
    if (!(recall_threshold > 0.0 && recall_threshold <= 1.0))
        throw ConfigError("recall_threshold must lie in (0, 1]");
}

namespace {

struct PairMetrics {
    double cos_alpha = diag::kSentinel;
    double c_t = diag::kSentinel;
    double margin = diag::kSentinel;
};

// Binary: the (g0, g1) angle and norm ratio. Multiclass: the class-vs-rest
// metrics of the class with the worst Eq.-(1) margin.
PairMetrics pair_metrics(const model::PerClassGradients& g) {
    PairMetrics m;
    if (g.classes() == 2) {
        if (g.degenerate[0] || g.degenerate[1]) return m;
        m.cos_alpha = g.cos_pair(0, 1);
        m.c_t = g.norms[1] / g.norms[0];
        m.margin = diag::gd_monotonicity_margin(m.cos_alpha, m.c_t);
        return m;
    }
    for (std::size_t l = 0; l < g.classes(); ++l) {
        if (g.degenerate[l]) continue;
        std::vector<double> rest(g.grads[l].size(), 0.0);
        for (std::size_t i = 0; i < g.classes(); ++i)
            if (i != l) vec_axpy(rest, 1.0, g.grads[i]);
        if (l2_norm(rest) <= kNormEpsilon) continue;
        const double cos_l = cosine_angle(g.grads[l], rest);
        const double c_l = l2_norm(rest) / g.norms[l];
        const double margin_l = diag::gd_monotonicity_margin(cos_l, c_l);
        if (!std::isfinite(m.margin) || margin_l < m.margin) {
            m.cos_alpha = cos_l;
            m.c_t = c_l;
            m.margin = margin_l;
        }
    }
    return m;
}

double schedule_one_plus_cos(const std::vector<std::vector<double>>& grads) {
    if (grads.size() != 2) return 1.0;
    const double n0 = l2_norm(grads[0]);
    const double n1 = l2_norm(grads[1]);
    if (n0 <= kNormEpsilon || n1 <= kNormEpsilon) return 1.0;
    return 1.0 + cosine_angle(grads[0], grads[1]);
}

std::vector<std::size_t> composite_indices(const std::vector<std::vector<std::size_t>>& per_class) {
    std::vector<std::size_t> out;
    for (const auto& c : per_class) out.insert(out.end(), c.begin(), c.end());
    return out;
}

}  // namespace

TrainResult run_training(const model::ModelSpec& spec, const data::MixtureData& mix,
                         const TrainConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    spec.validate();
    const data::Dataset& train = mix.train;
    const data::Dataset& test = mix.test;
    if (spec.input_dim != train.dim())
        throw ConfigError("model input_dim does not match dataset dimension");
    if (spec.classes != train.classes)
        throw ConfigError("model class count does not match dataset");

    SeededRng init_rng(seed, Stream::Init);
    model::Classifier clf = model::Classifier::initialize(spec, init_rng);
    std::vector<double> x = clf.flatten();
    SeededRng batch_master(seed, Stream::Batching);

    std::size_t steps_per_epoch = 1;
    if (cfg.algorithm == Algorithm::Sgd || needs_per_class_batches(cfg.algorithm)) {
        steps_per_epoch = cfg.n_batches;
    } else if (needs_oversampled_batches(cfg.algorithm)) {
        steps_per_epoch = train.counts[0] / cfg.per_class_size;
        if (steps_per_epoch == 0)
            throw ConfigError("batch.per_class_size exceeds the majority class count");
    }
    const std::size_t total_steps = cfg.epochs * steps_per_epoch;

    Schedule sched = cfg.schedule;
    if (sched.horizon == 0) sched.horizon = static_cast<double>(std::max<std::size_t>(total_steps, 1));

    diag::RunLog log;
    log.classes = train.classes;
    TrainResult result;

    const std::vector<std::size_t> test_all = [&] {
        std::vector<std::size_t> v(test.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
        return v;
    }();

    int pending_degenerate = 0;
    int pending_clamped = 0;

    auto evaluate = [&](std::size_t t, double eta) -> bool {
        clf.assign_flat(x);
        diag::RunLogRow row;
        row.t = t;
        row.eta = eta;
        row.loss_train.resize(train.classes);
        row.loss_test.resize(train.classes);
        for (std::size_t l = 0; l < train.classes; ++l) {
            row.loss_train[l] = model::per_class_loss(clf, train, l);
            row.loss_test[l] = clf.subset_loss(test.features, test.labels, test.class_indices[l],
                                               static_cast<double>(test.size()));
        }
        const auto train_pred = clf.predict(train.features);
        const auto test_pred = clf.predict(test.features);
        row.recall_train = diag::recall_metrics(train_pred, train.labels, train.classes).per_class;
        row.recall_test = diag::recall_metrics(test_pred, test.labels, test.classes).per_class;
        const auto pcg = model::per_class_gradients(clf, train, model::GradConvention::DatasetSize);
        row.grad_norm = pcg.norms;
        const PairMetrics pm = pair_metrics(pcg);
        row.cos_alpha = pm.cos_alpha;
        row.c_t = pm.c_t;
        row.eq1_margin = pm.margin;
        row.degenerate_flags = pending_degenerate;
        row.clamp_flags = pending_clamped;
        pending_degenerate = 0;
        pending_clamped = 0;
        bool finite = true;
        for (double v : row.loss_train)
            if (!std::isfinite(v)) finite = false;
        for (double v : row.loss_test)
            if (!std::isfinite(v)) finite = false;
        log.rows.push_back(std::move(row));
        return finite;
    };

    if (!evaluate(0, sched.value(0))) {
        log.diverged = true;
        log.divergence_step = 0;
        result.log = std::move(log);
        result.final_params = x;
        return result;
    }

    std::vector<std::vector<double>> fbg_cache;
    std::size_t fbg_age = 0;

    std::size_t t = 0;
    bool aborted = false;
    for (std::size_t epoch = 0; epoch < cfg.epochs && !aborted; ++epoch) {
        data::BatchPlan plan;
        if (!is_full_batch(cfg.algorithm)) {
            SeededRng epoch_rng = batch_master.split(epoch);
            if (cfg.algorithm == Algorithm::Sgd)
                plan = data::plan_uniform_batches(train, cfg.n_batches, epoch_rng);
            else if (needs_per_class_batches(cfg.algorithm))
                plan = data::plan_per_class_ratio_batches(train, cfg.n_batches, epoch_rng);
            else
                plan = data::plan_oversampled_batches(train, cfg.per_class_size, epoch_rng);
        }
        if (cfg.algorithm == Algorithm::PcnsgdR) {
            // Refresh on every epoch boundary.
            clf.assign_flat(x);
            fbg_cache.clear();
            for (std::size_t l = 0; l < train.classes; ++l)
                fbg_cache.push_back(model::per_class_gradient(
                    clf, train, l, model::GradConvention::ClassBatchMean));
            fbg_age = 0;
        }

        for (std::size_t k = 0; k < steps_per_epoch && !aborted; ++k) {
            clf.assign_flat(x);
            std::vector<std::vector<double>> grads;
            if (is_full_batch(cfg.algorithm)) {
                const auto pcg =
                    model::per_class_gradients(clf, train, model::GradConvention::DatasetSize);
                grads = pcg.grads;
            } else if (cfg.algorithm == Algorithm::Sgd) {
                const auto idx = composite_indices(plan.steps[k]);
                grads.push_back(clf.subset_gradient(train.features, train.labels, idx,
                                                    static_cast<double>(idx.size())));
            } else {
                for (std::size_t l = 0; l < train.classes; ++l) {
                    auto g = model::class_batch_gradient(clf, train, plan.steps[k][l],
                                                         model::GradConvention::ClassBatchMean);
                    if (!g) throw StateError("batch plan yielded an empty per-class batch");
                    grads.push_back(std::move(*g));
                }
            }

            if (cfg.algorithm == Algorithm::PcnsgdR && fbg_age >= cfg.fbg_refresh_interval) {
                fbg_cache.clear();
                for (std::size_t l = 0; l < train.classes; ++l)
                    fbg_cache.push_back(model::per_class_gradient(
                        clf, train, l, model::GradConvention::ClassBatchMean));
                fbg_age = 0;
            }

            const double eta = sched.value(t, schedule_one_plus_cos(grads));
            StepReport rep;
            switch (cfg.algorithm) {
                case Algorithm::Gd:
                    rep = gd_step(x, eta, grads);
                    break;
                case Algorithm::Pcngd:
                    rep = pcngd_step(x, eta, grads);
                    break;
                case Algorithm::Sgd:
                    rep = gd_step(x, eta, grads);
                    break;
                case Algorithm::Pcnsgd:
                    rep = pcnsgd_step(x, eta, grads);
                    break;
                case Algorithm::SgdO:
                    rep = sgd_oversampled_step(x, eta, grads);
                    break;
                case Algorithm::PcnsgdO:
                    rep = pcnsgd_o_step(x, eta, grads);
                    break;
                case Algorithm::PcnsgdR:
                    rep = pcnsgd_r_step(x, eta, grads, fbg_cache, cfg.p_min);
                    ++fbg_age;
                    break;
            }
            pending_degenerate += rep.degenerate_classes;
            pending_clamped += rep.clamped_projections;
            ++t;

            bool x_finite = true;
            for (double v : x)
                if (!std::isfinite(v)) x_finite = false;
            if (!x_finite) {
                log.diverged = true;
                log.divergence_step = t;
                aborted = true;
                break;
            }
            if (t % cfg.eval_interval == 0 || t == total_steps) {
                if (!evaluate(t, sched.value(t))) {
                    log.diverged = true;
                    log.divergence_step = t;
                    aborted = true;
                }
            }
        }
    }

    result.log = std::move(log);
    result.final_params = std::move(x);
    result.steps = t;
    return result;
}

}  // namespace imbopt::optim
