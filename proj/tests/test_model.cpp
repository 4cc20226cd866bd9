#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "imbopt/model.hpp"

using namespace imbopt;
using model::Classifier;
using model::GradConvention;
using model::ModelSpec;

namespace {

data::Dataset tiny_dataset(SeededRng& rng, std::size_t n0, std::size_t n1, std::size_t d) {
    const std::size_t n = n0 + n1;
    Tensor f({n, d});
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = i < n0 ? 0 : 1;
        for (std::size_t j = 0; j < d; ++j)
            f.at(i, j) = rng.normal() + (labels[i] == 0 ? 1.0 : -1.0);
    }
    return data::Dataset::build(std::move(f), std::move(labels), 2);
}

ModelSpec mlp_spec(std::size_t d, std::vector<std::size_t> hidden = {}, std::size_t classes = 2) {
    ModelSpec s;
    s.input_dim = d;
    s.hidden = std::move(hidden);
    s.classes = classes;
    s.activation = model::Activation::Tanh;
    return s;
}

}  // namespace

TEST_CASE("per-class losses sum to the full loss and respect the 1/n convention") {
    SeededRng rng(3, Stream::Data);
    const auto ds = tiny_dataset(rng, 5, 3, 4);
    SeededRng init(1, Stream::Init);
    const auto clf = Classifier::initialize(mlp_spec(4, {6}), init);

    // per-example oracle
    const double n = static_cast<double>(ds.size());
    std::vector<double> per_example(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i)
        per_example[i] = clf.subset_loss(ds.features, ds.labels, {i}, 1.0);

    double sum_classes = 0.0;
    for (std::size_t l = 0; l < 2; ++l) {
        double expect = 0.0;
        for (std::size_t i : ds.class_indices[l]) expect += per_example[i];
        expect /= n;
        const double got = model::per_class_loss(clf, ds, l);
        CHECK(got == doctest::Approx(expect).epsilon(1e-12));
        sum_classes += got;
    }
    CHECK(sum_classes == doctest::Approx(model::full_loss(clf, ds)).epsilon(1e-12));
    CHECK_THROWS_AS(model::per_class_loss(clf, ds, 7), DomainError);
}

TEST_CASE("empty class contributes zero loss") {
    Tensor f({3, 2}, {1, 0, 0, 1, 1, 1});
    auto ds = data::Dataset::build(std::move(f), {0, 0, 1}, 3);  // class 2 empty
    SeededRng init(2, Stream::Init);
    const auto clf = Classifier::initialize(mlp_spec(2, {}, 3), init);
    CHECK(model::per_class_loss(clf, ds, 2) == 0.0);
}

TEST_CASE("per-class gradient conventions and batch mean") {
    SeededRng rng(5, Stream::Data);
    const auto ds = tiny_dataset(rng, 6, 2, 3);
    SeededRng init(4, Stream::Init);
    const auto clf = Classifier::initialize(mlp_spec(3, {4}), init);

    // single example: its own gradient under the batch convention
    const auto single = model::class_batch_gradient(clf, ds, {ds.class_indices[1][0]},
                                                    GradConvention::ClassBatchMean);
    const auto direct =
        clf.subset_gradient(ds.features, ds.labels, {ds.class_indices[1][0]}, 1.0);
    REQUIRE(single.has_value());
    CHECK(*single == direct);

    // duplicated example leaves the mean unchanged
    const std::size_t i = ds.class_indices[0][0];
    const auto dup = clf.subset_gradient(ds.features, ds.labels, {i, i}, 2.0);
    const auto one = clf.subset_gradient(ds.features, ds.labels, {i}, 1.0);
    for (std::size_t k = 0; k < dup.size(); ++k)
        CHECK(dup[k] == doctest::Approx(one[k]).epsilon(1e-14));

    // batch mean equals the mean of per-example passes
    const auto& batch = ds.class_indices[0];
    const auto mean_grad = *model::class_batch_gradient(clf, ds, batch,
                                                        GradConvention::ClassBatchMean);
    std::vector<double> oracle(mean_grad.size(), 0.0);
    for (std::size_t idx : batch)
        vec_axpy(oracle, 1.0 / static_cast<double>(batch.size()),
                 clf.subset_gradient(ds.features, ds.labels, {idx}, 1.0));
    for (std::size_t k = 0; k < oracle.size(); ++k)
        CHECK(mean_grad[k] == doctest::Approx(oracle[k]).epsilon(1e-12));

    // the two conventions differ by n/n_l exactly
    const auto by_n = model::per_class_gradient(clf, ds, 0, GradConvention::DatasetSize);
    const double factor = static_cast<double>(ds.size()) / static_cast<double>(batch.size());
    for (std::size_t k = 0; k < by_n.size(); ++k)
        CHECK(mean_grad[k] == doctest::Approx(by_n[k] * factor).epsilon(1e-12));

    // empty subset is a skip-class signal, multi-class subsets are an error
    CHECK_FALSE(model::class_batch_gradient(clf, ds, {}, GradConvention::ClassBatchMean));
    std::vector<std::size_t> mixed{ds.class_indices[0][0], ds.class_indices[1][0]};
    CHECK_THROWS_AS(model::class_batch_gradient(clf, ds, mixed, GradConvention::ClassBatchMean),
                    DomainError);
}

TEST_CASE("decomposition: per-class gradients sum to the full gradient") {
    SeededRng rng(6, Stream::Data);
    const auto ds = tiny_dataset(rng, 7, 4, 5);
    SeededRng init(9, Stream::Init);
    const auto clf = Classifier::initialize(mlp_spec(5, {8, 4}), init);
    const auto full = model::full_gradient(clf, ds);
    const auto pcg = model::per_class_gradients(clf, ds, GradConvention::DatasetSize);
    std::vector<double> sum(full.size(), 0.0);
    for (const auto& g : pcg.grads) vec_axpy(sum, 1.0, g);
    CHECK(l2_norm(vec_sub(full, sum)) <= 1e-10 * (1.0 + l2_norm(full)));
}

TEST_CASE("class-swap antisymmetry for mirror-symmetric data at zero init") {
    Tensor f({2, 3}, {1, -2, 0.5, -1, 2, -0.5});
    auto ds = data::Dataset::build(std::move(f), {0, 1}, 2);
    ModelSpec spec = mlp_spec(3);
    Classifier clf(spec, {Tensor({2, 3}), Tensor({2})});  // all-zero linear model
    const auto g = model::full_gradient(clf, ds);
    // flattened: W row 0 (3), W row 1 (3), b (2)
    for (std::size_t c = 0; c < 3; ++c)
        CHECK(g[c] == doctest::Approx(-g[3 + c]).epsilon(1e-14));
    CHECK(g[6] == doctest::Approx(-g[7]).epsilon(1e-14));
}

TEST_CASE("extensivity: class gradient scales with duplicated examples") {
    SeededRng rng(8, Stream::Data);
    const auto ds = tiny_dataset(rng, 4, 2, 3);
    SeededRng init(10, Stream::Init);
    const auto clf = Classifier::initialize(mlp_spec(3), init);
    const std::size_t i = ds.class_indices[1][0];
    const double n = static_cast<double>(ds.size());
    const auto once = clf.subset_gradient(ds.features, ds.labels, {i}, n);
    const auto thrice = clf.subset_gradient(ds.features, ds.labels, {i, i, i}, n);
    for (std::size_t k = 0; k < once.size(); ++k)
        CHECK(thrice[k] == doctest::Approx(3.0 * once[k]).epsilon(1e-12));
}

TEST_CASE("gradient vanishes at an interpolating optimum of a separable problem") {
    Tensor f({2, 2}, {1, 0, -1, 0});
    auto ds = data::Dataset::build(std::move(f), {0, 1}, 2);
    ModelSpec spec = mlp_spec(2);
    // Large-margin linear separator: rows +/- K e1. Softmax saturates, so the
    // gradient must be exponentially small.
    const double k = 30.0;
    Classifier clf(spec, {Tensor({2, 2}, {k, 0, -k, 0}), Tensor({2})});
    CHECK(l2_norm(model::full_gradient(clf, ds)) < 1e-10);
}

TEST_CASE("per-class loss invariant under permutation within a class") {
    SeededRng rng(12, Stream::Data);
    auto ds = tiny_dataset(rng, 5, 5, 3);
    SeededRng init(13, Stream::Init);
    const auto clf = Classifier::initialize(mlp_spec(3, {4}), init);
    const double before = model::per_class_loss(clf, ds, 0);
    std::reverse(ds.class_indices[0].begin(), ds.class_indices[0].end());
    CHECK(model::per_class_loss(clf, ds, 0) == doctest::Approx(before).epsilon(1e-15));
}

TEST_CASE("flatten order and checkpoint round trip") {
    SeededRng init(20, Stream::Init);
    const auto spec = mlp_spec(3, {2});
    const auto clf = Classifier::initialize(spec, init);
    const auto flat = clf.flatten();
    CHECK(flat.size() == clf.param_count());
    CHECK(flat.size() == 2 * 3 + 2 + 2 * 2 + 2);
    // layer-major, row-major: first entry is W0(0,0)
    CHECK(flat[0] == clf.params()[0][0]);
    CHECK(flat[6] == clf.params()[1][0]);  // b0 follows W0

    const std::string path = "checkpoint_test.json";
    model::save_checkpoint(clf, path);
    const auto loaded = model::load_checkpoint(path);
    CHECK(loaded.flatten() == flat);
    CHECK(loaded.spec().hidden == spec.hidden);
    std::remove(path.c_str());
}

TEST_CASE("initialization: zero biases, 1/sqrt(fan_in) weights, deterministic") {
    SeededRng a(31, Stream::Init), b(31, Stream::Init);
    const auto spec = mlp_spec(9, {4});
    const auto c1 = Classifier::initialize(spec, a);
    const auto c2 = Classifier::initialize(spec, b);
    CHECK(c1.flatten() == c2.flatten());
    for (std::size_t i = 0; i < 4; ++i) CHECK(c1.params()[1][i] == 0.0);
    // weight scale should be around 1/3 for fan_in 9
    double ss = 0;
    for (std::size_t i = 0; i < c1.params()[0].size(); ++i)
        ss += c1.params()[0][i] * c1.params()[0][i];
    const double std_hat = std::sqrt(ss / static_cast<double>(c1.params()[0].size()));
    CHECK(std_hat > 0.1);
    CHECK(std_hat < 0.8);
}
