#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with its runtime.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "imbopt.h"
#include "imbopt/batteries.hpp"
#include "imbopt/experiment.hpp"
#include "imbopt/model.hpp"
#include "imbopt/optim.hpp"
#include "imbopt/theory.hpp"

using namespace imbopt;

namespace {

class Criterion {
public:
    Criterion(int number, std::string what) : number_(number), what_(std::move(what)) {
        start_ = std::chrono::steady_clock::now();
    }
    double elapsed_s() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    void finish(bool pass) const {
        std::printf("[criterion %2d] %s  %-58s (%.1f s)\n", number_, pass ? "PASS" : "FAIL",
                    what_.c_str(), elapsed_s());
        std::fflush(stdout);
    }

private:
    int number_;
    std::string what_;
    std::chrono::steady_clock::time_point start_;
};

data::MixtureData binary_mixture(double rho, std::size_t n_minor, std::size_t dim, double sep,
                                 std::uint64_t seed) {
    data::ImbalanceProfile p;
    p.kind = data::ImbalanceProfile::Kind::BinaryRatio;
    p.rho = rho;
    p.n_minor = n_minor;
    return data::make_gaussian_mixture(p, dim, sep, seed);
}

model::ModelSpec linear_softmax(std::size_t dim) {
    model::ModelSpec s;
    s.input_dim = dim;
    s.classes = 2;
    s.activation = model::Activation::Tanh;
    return s;
}

}  // namespace

TEST_CASE("criterion 1: autodiff vs central finite differences") {
    Criterion c(1, "gradient correctness on 20 random MLPs, rel err < 1e-5");
    SeededRng meta(101, Stream::Init);
    double worst = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        const std::size_t d = 4 + meta.uniform_below(13);        // <= 16
        const std::size_t w1 = 4 + meta.uniform_below(29);       // <= 32
        const std::size_t w2 = 2 + meta.uniform_below(15);
        const std::size_t classes = 2 + meta.uniform_below(4);
        const std::size_t batch = 4 + meta.uniform_below(8);

        model::ModelSpec spec;
        spec.input_dim = d;
        spec.hidden = {w1, w2};
        spec.classes = classes;
        spec.activation = model::Activation::Tanh;
        SeededRng init(200 + inst, Stream::Init);
        const auto clf = model::Classifier::initialize(spec, init);

        Tensor x({batch, d});
        SeededRng data_rng(300 + inst, Stream::Data);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = data_rng.normal();
        std::vector<int> labels(batch);
        for (auto& y : labels) y = int(data_rng.uniform_below(classes));
        std::vector<std::size_t> subset(batch);
        for (std::size_t i = 0; i < batch; ++i) subset[i] = i;

        auto g = clf.build_graph(x, labels, subset, double(batch));
        SeededRng coords(400 + inst, Stream::Noise);
        worst = std::max(worst, g.finite_difference_check(coords, 1e-5, 50));
    }
    const bool pass = worst < 1e-5 && c.elapsed_s() < 10.0;
    c.finish(pass);
    CHECK(worst < 1e-5);
    CHECK(c.elapsed_s() < 10.0);
}

TEST_CASE("criterion 2: per-class decomposition identity on logged checkpoints") {
    Criterion c(2, "|grad f - sum_l grad f^(l)| <= 1e-10 (1 + |grad f|) everywhere");
    bool pass = true;
    const auto mix = binary_mixture(10, 60, 8, 3.0, 777);
    for (const char* alg : {"gd", "pcngd", "pcnsgd", "sgd_o"}) {
        optim::TrainConfig cfg;
        cfg.algorithm = optim::algorithm_from_string(alg);
        cfg.schedule = optim::Schedule::constant(0.1);
        cfg.epochs = optim::is_full_batch(cfg.algorithm) ? 40 : 4;
        cfg.eval_interval = 5;
        if (cfg.algorithm == optim::Algorithm::SgdO)
            cfg.per_class_size = 10;
        else if (!optim::is_full_batch(cfg.algorithm))
            cfg.n_batches = 6;

        SeededRng init(9, Stream::Init);
        auto clf = model::Classifier::initialize(linear_softmax(8), init);
        const auto res = optim::run_training(linear_softmax(8), mix, cfg, 31);
        REQUIRE_FALSE(res.log.diverged);
        // re-evaluate the identity at a sample of checkpoints: the final
        // parameters plus the initial ones
        for (const auto& params : {res.final_params, clf.flatten()}) {
            clf.assign_flat(params);
            const auto full = model::full_gradient(clf, mix.train);
            const auto pcg =
                model::per_class_gradients(clf, mix.train, model::GradConvention::DatasetSize);
            std::vector<double> sum(full.size(), 0.0);
            for (const auto& g : pcg.grads) vec_axpy(sum, 1.0, g);
            const double err = l2_norm(vec_sub(full, sum));
            if (err > 1e-10 * (1.0 + l2_norm(full))) pass = false;
        }
    }
    c.finish(pass);
    CHECK(pass);
}

TEST_CASE("criterion 3: tightness of the GD expansion on 50 quadratics") {
    Criterion c(3, "exact one-step change matches to 1e-10; sign flips at threshold");
    const auto result = battery::run_battery("tightness", 1234, {});
    const bool pass = result.violations == 0 && result.checks >= 50 && c.elapsed_s() < 5.0;
    c.finish(pass);
    CHECK(result.violations == 0);
    CHECK(result.checks >= 50);
    CHECK(c.elapsed_s() < 5.0);
}

TEST_CASE("criterion 4: theorem-bound battery, zero violations") {
    Criterion c(4, "Thm 1/2/3/4 + R-PCNGD over 100 instances, T in {1e2,1e3,1e4}");
    bool pass = true;
    for (const char* name : {"gd", "pcngd_v1", "pcngd_v2", "rpcngd", "pl_decreasing",
                             "pl_constant", "pcnsgd_ball"}) {
        const auto result = battery::run_battery(name, 4321, {});
        std::printf("    battery %-13s checks=%zu violations=%zu regenerated=%zu\n", name,
                    result.checks, result.violations, result.regenerated_instances);
        std::fflush(stdout);
        if (result.violations != 0) pass = false;
    }
    pass = pass && c.elapsed_s() < 300.0;
    c.finish(pass);
    CHECK(pass);
    CHECK(c.elapsed_s() < 300.0);
}

TEST_CASE("criterion 5: PCNGD per-class monotonicity below the decrease threshold") {
    Criterion c(5, "100 smooth instances: non-increasing per-class losses");
    SeededRng meta(55, Stream::Noise);
    bool pass = true;
    for (int inst = 0; inst < 100 && pass; ++inst) {
        const double angle = 0.5 + 2.4 * meta.uniform01();  // away from pi
        const double ratio = 0.3 + 3.0 * meta.uniform01();
        auto q = theory::make_two_class_quadratic(angle, ratio, 3);
        const double l2 = q.l2();
        std::vector<double> x(3, 0.0);
        for (int t = 0; t < 200; ++t) {
            const auto g0 = q.f0.grad(x);
            const auto g1 = q.f1.grad(x);
            const double n0 = l2_norm(g0), n1 = l2_norm(g1);
            if (n0 <= kNormEpsilon || n1 <= kNormEpsilon) break;
            const double opc = 1.0 + cosine_angle(g0, g1);
            if (opc <= 1e-9) break;
            // Eq. (pcngd-decrease): decrease guaranteed for
            // eta < (1 + cos a) |grad f^(l)| / (2 L2), any l; stay below both.
            const double eta = 0.45 * opc * std::min(n0, n1) / (2.0 * l2);
            if (eta <= 0) break;
            const double f0_before = q.f0.value(x), f1_before = q.f1.value(x);
            optim::pcngd_step(x, eta, {g0, g1});
            if (q.f0.value(x) > f0_before + 1e-12 * (1.0 + std::abs(f0_before)) ||
                q.f1.value(x) > f1_before + 1e-12 * (1.0 + std::abs(f1_before)))
                pass = false;
        }
    }
    c.finish(pass);
    CHECK(pass);
}

TEST_CASE("criterion 6: MID at desk scale, GD vs PCNGD") {
    Criterion c(6, "rho=20 mixture: GD shows MID, PCNGD avoids it and wins tau");
    const std::size_t seeds = 10;
    int gd_mid = 0, pcngd_clear = 0;
    bool tau_ordered = true;
    int both_finished = 0;

    for (std::size_t s = 1; s <= seeds; ++s) {
        const auto mix = binary_mixture(20, 100, 50, 3.0, 1000 + s);
        optim::TrainConfig base;
        base.schedule = optim::Schedule::constant(0.25);
        base.epochs = 1500;
        base.eval_interval = 5;
        base.recall_threshold = 0.7;
        base.mid_window_fraction = 0.2;
        base.mid_drop_threshold = 0.3;

        auto run_alg = [&](optim::Algorithm alg) {
            optim::TrainConfig cfg = base;
            cfg.algorithm = alg;
            const auto res = optim::run_training(linear_softmax(50), mix, cfg, 1000 + s);
            REQUIRE_FALSE(res.log.diverged);
            const auto window = static_cast<std::size_t>(
                std::ceil(cfg.mid_window_fraction * double(res.log.rows.size())));
            return diag::detect_mid(res.log, 1, window, cfg.mid_drop_threshold,
                                    cfg.recall_threshold);
        };

        const auto gd = run_alg(optim::Algorithm::Gd);
        const auto pcngd = run_alg(optim::Algorithm::Pcngd);
        if (gd.mid_present && gd.mid_depth >= 0.3) ++gd_mid;
        if (!pcngd.mid_present) ++pcngd_clear;
        if (std::isfinite(gd.tau) && std::isfinite(pcngd.tau)) {
            ++both_finished;
            if (!(pcngd.tau < gd.tau)) tau_ordered = false;
        }
    }
    std::printf("    gd_mid=%d/10 pcngd_clear=%d/10 both_finished=%d tau_ordered=%d\n", gd_mid,
                pcngd_clear, both_finished, tau_ordered ? 1 : 0);
    const bool pass =
        gd_mid >= 8 && pcngd_clear >= 9 && tau_ordered && c.elapsed_s() < 120.0;
    c.finish(pass);
    CHECK(gd_mid >= 8);
    CHECK(pcngd_clear >= 9);
    CHECK(tau_ordered);
    CHECK(c.elapsed_s() < 120.0);
}

TEST_CASE("criterion 7: stochastic ordering, oversampling avoids the MID") {
    Criterion c(7, "SGD/PCNSGD show MID; SGD+O/PCNSGD+O avoid it");
    const std::size_t seeds = 10;
    int sgd_mid = 0, pcnsgd_mid = 0, sgdo_clear = 0, pcnsgdo_clear = 0;

    for (std::size_t s = 1; s <= seeds; ++s) {
        const auto mix = binary_mixture(20, 100, 50, 3.0, 2000 + s);
        auto run_alg = [&](optim::Algorithm alg) {
            optim::TrainConfig cfg;
            cfg.algorithm = alg;
            cfg.schedule = optim::Schedule::constant(0.02);
            cfg.epochs = 60;
            cfg.eval_interval = 10;
            cfg.recall_threshold = 0.7;
            cfg.mid_window_fraction = 0.2;
            cfg.mid_drop_threshold = 0.3;
            if (alg == optim::Algorithm::SgdO || alg == optim::Algorithm::PcnsgdO)
                cfg.per_class_size = 8;
            else
                cfg.n_batches = 50;  // minority batches of 2 under per-class ratio
            const auto res = optim::run_training(linear_softmax(50), mix, cfg, 2000 + s);
            REQUIRE_FALSE(res.log.diverged);
            const auto window = static_cast<std::size_t>(
                std::ceil(cfg.mid_window_fraction * double(res.log.rows.size())));
            return diag::detect_mid(res.log, 1, window, cfg.mid_drop_threshold,
                                    cfg.recall_threshold);
        };
        if (run_alg(optim::Algorithm::Sgd).mid_present) ++sgd_mid;
        if (run_alg(optim::Algorithm::Pcnsgd).mid_present) ++pcnsgd_mid;
        if (!run_alg(optim::Algorithm::SgdO).mid_present) ++sgdo_clear;
        if (!run_alg(optim::Algorithm::PcnsgdO).mid_present) ++pcnsgdo_clear;
    }
    std::printf("    sgd_mid=%d pcnsgd_mid=%d sgdo_clear=%d pcnsgdo_clear=%d (of 10)\n", sgd_mid,
                pcnsgd_mid, sgdo_clear, pcnsgdo_clear);
    const bool pass = sgd_mid >= 7 && pcnsgd_mid >= 7 && sgdo_clear >= 9 &&
                      pcnsgdo_clear >= 9 && c.elapsed_s() < 300.0;
    c.finish(pass);
    CHECK(sgd_mid >= 7);
    CHECK(pcnsgd_mid >= 7);
    CHECK(sgdo_clear >= 9);
    CHECK(pcnsgdo_clear >= 9);
    CHECK(c.elapsed_s() < 300.0);
}

TEST_CASE("criterion 8: CLT projection check") {
    Criterion c(8, "Eq.(8) Monte Carlo: 3-sigma match at n~=32, 1/n scaling");
    const auto result = battery::run_battery("clt", 88, {});
    const bool pass = result.violations == 0 && c.elapsed_s() < 30.0;
    c.finish(pass);
    CHECK(result.violations == 0);
    CHECK(c.elapsed_s() < 30.0);
}

TEST_CASE("criterion 9: PCNSGD+R equalizes FBG projections") {
    Criterion c(9, "rho=7, n~_minority=2: rescaled projections agree across classes");
    const auto mix = binary_mixture(7, 100, 20, 3.5, 909);
    // Train briefly with PCNSGD so the measurement happens away from init.
    optim::TrainConfig cfg;
    cfg.algorithm = optim::Algorithm::Pcnsgd;
    cfg.schedule = optim::Schedule::constant(0.02);
    cfg.epochs = 3;
    cfg.n_batches = 50;
    const auto res = optim::run_training(linear_softmax(20), mix, cfg, 909);
    REQUIRE_FALSE(res.log.diverged);
    SeededRng init(909, Stream::Init);
    auto clf = model::Classifier::initialize(linear_softmax(20), init);
    clf.assign_flat(res.final_params);

    // Monte Carlo over fresh per-class batches at this parameter point.
    std::vector<std::vector<double>> fbg;
    for (std::size_t l = 0; l < 2; ++l)
        fbg.push_back(
            model::per_class_gradient(clf, mix.train, l, model::GradConvention::ClassBatchMean));

    SeededRng draws(4242, Stream::Noise);
    const std::size_t n_draws = 3000;
    double mean[2] = {0, 0}, m2[2] = {0, 0};
    std::size_t batch_sizes[2] = {14, 2};  // rho = 7 with minority batches of 2
    for (std::size_t k = 0; k < n_draws; ++k) {
        std::vector<std::vector<double>> batch_grads;
        for (std::size_t l = 0; l < 2; ++l) {
            const auto pick = sample_without_replacement(draws, mix.train.counts[l],
                                                         batch_sizes[l]);
            std::vector<std::size_t> subset;
            for (auto i : pick) subset.push_back(mix.train.class_indices[l][i]);
            batch_grads.push_back(*model::class_batch_gradient(
                clf, mix.train, subset, model::GradConvention::ClassBatchMean));
        }
        std::vector<double> x(res.final_params);
        std::vector<double> projections;
        const auto rep = optim::pcnsgd_r_step(x, 0.0, batch_grads, fbg, 0.05, &projections);
        for (std::size_t l = 0; l < 2; ++l) {
            // projection of the rescaled contribution onto the FBG direction
            const double p =
                dot(rep.contributions[l], fbg[l]) / l2_norm(fbg[l]);
            mean[l] += p;
            m2[l] += p * p;
        }
    }
    double stderr_sum = 0.0;
    for (std::size_t l = 0; l < 2; ++l) {
        mean[l] /= double(n_draws);
        const double var = std::max(0.0, m2[l] / double(n_draws) - mean[l] * mean[l]);
        stderr_sum += var / double(n_draws);
    }
    const double diff = std::abs(mean[0] - mean[1]);
    const double joint_stderr = std::sqrt(stderr_sum);
    std::printf("    mean proj: majority=%.6f minority=%.6f diff=%.2e 3*stderr=%.2e\n", mean[0],
                mean[1], diff, 3 * joint_stderr);
    const bool pass = diff <= 3.0 * joint_stderr + 1e-9 && c.elapsed_s() < 60.0;
    c.finish(pass);
    CHECK(diff <= 3.0 * joint_stderr + 1e-9);
    CHECK(c.elapsed_s() < 60.0);
}

TEST_CASE("criterion 10: multiclass worst-case ratios") {
    Criterion c(10, "collinear instances give C_t = L-1 and sum n_i / n_0 to 1e-12");
    const auto result = battery::run_battery("multiclass", 55, {});
    const bool pass = result.violations == 0;
    c.finish(pass);
    CHECK(result.violations == 0);
}

TEST_CASE("criterion 11: batteries are byte-deterministic under a fixed seed") {
    Criterion c(11, "rerun battery + experiment CSVs are byte-identical");
    namespace fs = std::filesystem;
    auto slurp = [](const std::string& p) {
        std::ifstream is(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(is)),
                           std::istreambuf_iterator<char>());
    };
    bool pass = true;

    const auto opt = battery::BatteryOptions::quick();
    for (const char* name : {"tightness", "clt", "multiclass"}) {
        battery::run_battery(name, 7, opt).write_csv("det_a.csv");
        battery::run_battery(name, 7, opt).write_csv("det_b.csv");
        if (slurp("det_a.csv") != slurp("det_b.csv")) pass = false;
    }
    fs::remove("det_a.csv");
    fs::remove("det_b.csv");

    exp::ExperimentConfig cfg;
    cfg.profile.kind = data::ImbalanceProfile::Kind::BinaryRatio;
    cfg.profile.rho = 5;
    cfg.profile.n_minor = 30;
    cfg.dim = 4;
    cfg.separation = 3.0;
    cfg.model = linear_softmax(4);
    cfg.train.algorithm = optim::Algorithm::Pcnsgd;
    cfg.train.schedule = optim::Schedule::constant(0.05);
    cfg.train.epochs = 3;
    cfg.train.n_batches = 5;
    cfg.train.eval_interval = 3;
    cfg.seeds = {3, 4, 5};
    cfg.output_dir = "det_exp_a";
    exp::run_experiment(cfg, 3);
    cfg.output_dir = "det_exp_b";
    exp::run_experiment(cfg, 1);  // thread count must not change the bytes
    for (const char* f : {"run_3.csv", "run_4.csv", "run_5.csv", "summary.csv",
                          "aggregate.csv", "manifest.json"}) {
        if (slurp(std::string("det_exp_a/") + f) != slurp(std::string("det_exp_b/") + f))
            pass = false;
    }
    fs::remove_all("det_exp_a");
    fs::remove_all("det_exp_b");

    c.finish(pass);
    CHECK(pass);
}
