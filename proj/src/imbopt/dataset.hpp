#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "imbopt/rng.hpp"
#include "imbopt/tensor.hpp"

namespace imbopt::data {

/// counts_i = round-half-up(n_max * base^i) for i in [0, classes).
/// Requires n_max * base^(classes-1) >= 0.5 so every class keeps >= 1 example.
std::vector<std::size_t> geometric_counts(std::size_t n_max, double base, std::size_t classes);

struct ImbalanceProfile {
    enum class Kind { BinaryRatio, Step, Geometric };

    Kind kind = Kind::BinaryRatio;

    // BinaryRatio: two classes with counts {round(rho * n_minor), n_minor}.
    double rho = 1.0;
    std::size_t n_minor = 0;

    // Step: `majority_classes` classes with n_major examples, the rest with n_minor.
    std::size_t classes = 2;
    std::size_t majority_classes = 1;
    std::size_t n_major = 0;

    // Geometric: geometric_counts(n_max, base, classes).
    std::size_t n_max = 0;
    double base = 0.6;

    std::vector<std::size_t> counts() const;
    std::size_t class_count() const;
};

/// Labeled feature matrix with per-class index sets. Class 0 is the (weak)
/// majority: n_0 >= n_l for all l.
struct Dataset {
    Tensor features;  // n x d
    std::vector<int> labels;
    std::size_t classes = 0;
    std::vector<std::vector<std::size_t>> class_indices;
    std::vector<std::size_t> counts;
    std::vector<double> fractions;  // rho_l = n_l / n

    static Dataset build(Tensor features, std::vector<int> labels, std::size_t classes,
                         bool enforce_majority_convention = true);

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return features.rank() == 2 ? features.cols() : 0; }
};

struct MixtureData {
    Dataset train;
    Dataset test;  // balanced, min(min_l n_l, 200) examples per class
    std::vector<std::vector<double>> class_means;
};

/// Unit-covariance Gaussian classes with adjacent means `separation` apart
/// (scaled basis vectors when dim >= classes, an axis layout otherwise).
/// Train counts follow the profile; the test split is balanced and drawn
/// from a disjoint stream of the same seed.
MixtureData make_gaussian_mixture(const ImbalanceProfile& profile, std::size_t dim,
                                  double separation, std::uint64_t seed);

struct BatchPlan {
    enum class Scheme { Uniform, PerClassRatio, OversampledEqual };

    Scheme scheme = Scheme::PerClassRatio;
    // steps[t][l] = dataset indices of class l used by composite batch t.
    std::vector<std::vector<std::vector<std::size_t>>> steps;
    std::vector<std::size_t> batch_sizes;   // n~_l per class (0 for Uniform)
    std::vector<std::size_t> batch_counts;  // N_b^(l) per class
    std::size_t composite_size = 0;         // Uniform only
    std::size_t regroups = 0;               // mid-epoch reshuffles (OversampledEqual)

    std::size_t steps_per_epoch() const { return steps.size(); }
};

/// Each class shuffled and cut into n_b contiguous batches of size
/// floor(n_l / n_b) (remainders dropped); batch t pairs the t-th batch of
/// every class.
BatchPlan plan_per_class_ratio_batches(const Dataset& ds, std::size_t n_b, SeededRng& rng);

/// Equal per-class batch size s; epoch length N_b^(0) = floor(n_0 / s).
/// A class whose batches run out mid-epoch is reshuffled and re-cut (after
/// the exhausted batch is consumed; the regroup that would coincide with the
/// end of the epoch is superseded by the next epoch's shuffle).
BatchPlan plan_oversampled_batches(const Dataset& ds, std::size_t per_class_size, SeededRng& rng);

/// Plain SGD batches: one shuffle of the whole dataset cut into n_b batches
/// of size floor(n / n_b); per-class membership is recorded for diagnostics.
BatchPlan plan_uniform_batches(const Dataset& ds, std::size_t n_b, SeededRng& rng);

void export_csv(const Dataset& ds, const std::string& path);
Dataset import_csv(const std::string& path);

}  // namespace imbopt::data
