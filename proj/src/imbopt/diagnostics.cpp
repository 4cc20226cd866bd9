#include "imbopt/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "imbopt/csv.hpp"

namespace imbopt::diag {

namespace {

double macro_of(const std::vector<double>& per_class) {
    double acc = 0.0;
    std::size_t n = 0;
    for (double r : per_class) {
        if (std::isnan(r)) continue;
        acc += r;
        ++n;
    }
    return n == 0 ? kSentinel : acc / static_cast<double>(n);
}

}  // namespace

double RunLogRow::macro_recall_train() const { return macro_of(recall_train); }
double RunLogRow::macro_recall_test() const { return macro_of(recall_test); }

std::vector<std::string> RunLog::csv_header() const {
    std::vector<std::string> h = {"t", "eta"};
    for (std::size_t l = 0; l < classes; ++l) {
        const std::string s = std::to_string(l);
        h.push_back("loss_train_" + s);
        h.push_back("loss_test_" + s);
        h.push_back("recall_train_" + s);
        h.push_back("recall_test_" + s);
        h.push_back("gradnorm_" + s);
    }
    h.insert(h.end(), {"cos_alpha", "c_t", "eq1_margin", "flag_degenerate", "flag_clamped"});
    return h;
}

void RunLog::write_csv(std::ostream& os) const {
    csv::Writer w(os);
    w.row(csv_header());
    for (const auto& r : rows) {
        w.field(static_cast<std::uint64_t>(r.t)).field(r.eta);
        for (std::size_t l = 0; l < classes; ++l) {
            w.field(r.loss_train[l])
                .field(r.loss_test[l])
                .field(r.recall_train[l])
                .field(r.recall_test[l])
                .field(r.grad_norm[l]);
        }
        w.field(r.cos_alpha).field(r.c_t).field(r.eq1_margin);
        w.field(static_cast<std::int64_t>(r.degenerate_flags));
        w.field(static_cast<std::int64_t>(r.clamp_flags));
        w.end_row();
    }
}

double gradient_ratio(const model::PerClassGradients& g, std::size_t l) {
    if (l >= g.classes()) throw DomainError("gradient_ratio: unknown class");
    if (g.degenerate[l]) return kSentinel;
    std::vector<double> rest(g.grads[l].size(), 0.0);
    for (std::size_t i = 0; i < g.classes(); ++i)
        if (i != l) vec_axpy(rest, 1.0, g.grads[i]);
    return l2_norm(rest) / g.norms[l];
}

double gd_monotonicity_margin(double cos_alpha, double c_t) {
    if (!std::isfinite(cos_alpha) || !std::isfinite(c_t)) return kSentinel;
    return 1.0 + cos_alpha * c_t;
}

RecallMetrics recall_metrics(const std::vector<int>& predictions, const std::vector<int>& labels,
                             std::size_t classes) {
    if (predictions.size() != labels.size())
        throw DimensionError("recall_metrics: predictions/labels length mismatch");
    std::vector<std::size_t> hits(classes, 0), totals(classes, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto y = static_cast<std::size_t>(labels[i]);
        if (y >= classes) throw DomainError("recall_metrics: label out of range");
        ++totals[y];
        if (predictions[i] == labels[i]) ++hits[y];
    }
    RecallMetrics m;
    m.per_class.resize(classes);
    for (std::size_t l = 0; l < classes; ++l) {
        if (totals[l] == 0) {
            m.per_class[l] = kSentinel;
            ++m.empty_classes;
        } else {
            m.per_class[l] = static_cast<double>(hits[l]) / static_cast<double>(totals[l]);
        }
    }
    m.macro = macro_of(m.per_class);
    return m;
}

MidReport detect_mid(const RunLog& log, std::size_t minority_class, std::size_t window_evals,
                     double drop_threshold, double recall_threshold) {
    if (log.rows.empty()) throw DomainError("detect_mid: empty run log");
    if (minority_class >= log.classes) throw DomainError("detect_mid: unknown class");

    MidReport rep;
    const double initial = log.rows.front().recall_test[minority_class];
    const std::size_t window = std::min<std::size_t>(window_evals, log.rows.size());
    std::size_t first_drop_row = log.rows.size();
    for (std::size_t i = 0; i < window; ++i) {
        const double r = log.rows[i].recall_test[minority_class];
        rep.mid_depth = std::max(rep.mid_depth, initial - r);
        if (r < initial - drop_threshold && first_drop_row == log.rows.size())
            first_drop_row = i;
    }
    rep.mid_present = first_drop_row < log.rows.size();
    if (rep.mid_present) {
        const std::size_t drop_step = log.rows[first_drop_row].t;
        std::size_t end_step = log.rows.back().t;
        for (std::size_t i = first_drop_row + 1; i < log.rows.size(); ++i) {
            if (log.rows[i].recall_test[minority_class] >= initial) {
                end_step = log.rows[i].t;
                rep.recovered = true;
                break;
            }
        }
        rep.mid_duration = end_step - drop_step;
    }
    for (const auto& row : log.rows) {
        if (row.macro_recall_test() >= recall_threshold) {
            rep.tau = static_cast<double>(row.t);
            break;
        }
    }
    if (log.rows.size() > 1)
        rep.tau_uncertainty = static_cast<double>(log.rows[1].t - log.rows[0].t);
    return rep;
}

CltCheck clt_projection_check(const std::vector<double>& fbg,
                              const std::vector<double>& noise_cov_diag, std::size_t n_tilde,
                              std::size_t draws, SeededRng& rng) {
    CltCheck out;
    out.draws = draws;
    const double fbg_norm = l2_norm(fbg);
    if (fbg_norm <= kNormEpsilon) return out;  // sentinel-filled
    if (n_tilde < 2) throw DomainError("clt_projection_check: n_tilde must be >= 2");
    if (draws == 0) throw DomainError("clt_projection_check: need at least one draw");

    const std::vector<double> zero(fbg.size(), 0.0);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n_tilde));
    double sum_proj = 0.0, sum_proj_sq = 0.0, sum_att = 0.0;
    for (std::size_t k = 0; k < draws; ++k) {
        const std::vector<double> z = gaussian_sample(rng, zero, noise_cov_diag);
        std::vector<double> g_hat = fbg;
        vec_axpy(g_hat, inv_sqrt_n, z);
        const double proj = cosine_angle(g_hat, fbg);
        sum_proj += proj;
        sum_proj_sq += proj * proj;
        const double cos_z = cosine_angle(z, fbg);
        const double sin_sq = 1.0 - cos_z * cos_z;
        const double z_sq = dot(z, z);
        sum_att += z_sq * sin_sq /
                   (2.0 * static_cast<double>(n_tilde) * fbg_norm * fbg_norm);
    }
    const double n = static_cast<double>(draws);
    out.measured = sum_proj / n;
    out.mean_attenuation = sum_att / n;
    out.predicted = 1.0 - out.mean_attenuation;
    const double var = std::max(0.0, sum_proj_sq / n - out.measured * out.measured);
    out.stderr_measured = std::sqrt(var / n);
    return out;
}

RescalingFactor rescaling_factor(double attenuation_majority, double attenuation_minority) {
    RescalingFactor out;
    double num = 1.0 - attenuation_majority;
    double den = 1.0 - attenuation_minority;
    constexpr double kFloor = 0.05;
    if (num <= 0.0) {
        num = kFloor;
        out.clamped = true;
    }
    if (den <= 0.0) {
        den = kFloor;
        out.clamped = true;
    }
    out.alpha = num / den;
    return out;
}

FixedPointRatio fixed_point_ratio(const std::vector<double>& g0, const std::vector<double>& g1) {
    FixedPointRatio out;
    const double n0 = l2_norm(g0);
    const double n1 = l2_norm(g1);
    if (n0 <= kNormEpsilon || n1 <= kNormEpsilon) {
        out.degenerate = true;
        return out;
    }
    out.cosine = cosine_angle(g0, g1);
    out.gamma = n0 / n1;
    return out;
}

}  // namespace imbopt::diag
