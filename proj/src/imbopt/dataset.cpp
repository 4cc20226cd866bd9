#include "imbopt/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "imbopt/csv.hpp"

namespace imbopt::data {

std::vector<std::size_t> geometric_counts(std::size_t n_max, double base, std::size_t classes) {
    if (classes < 2) throw DomainError("geometric_counts: need at least 2 classes");
    if (!(base > 0.0 && base < 1.0)) throw DomainError("geometric_counts: base must be in (0,1)");
    if (n_max == 0) throw DomainError("geometric_counts: n_max must be positive");
    if (static_cast<double>(n_max) * std::pow(base, static_cast<double>(classes - 1)) < 0.5)
        throw DomainError("geometric_counts: smallest class would round to zero");
    std::vector<std::size_t> counts(classes);
    for (std::size_t i = 0; i < classes; ++i) {
        const double v = static_cast<double>(n_max) * std::pow(base, static_cast<double>(i));
        counts[i] = static_cast<std::size_t>(std::floor(v + 0.5));  // round half up
    }
    return counts;
}

std::vector<std::size_t> ImbalanceProfile::counts() const {
    switch (kind) {
        case Kind::BinaryRatio: {
            if (n_minor == 0) throw DomainError("binary profile: n_minor must be positive");
            if (!(rho >= 1.0)) throw DomainError("binary profile: rho must be >= 1");
            const auto n_major_ct =
                static_cast<std::size_t>(std::floor(rho * static_cast<double>(n_minor) + 0.5));
            return {n_major_ct, n_minor};
        }
        case Kind::Step: {
            if (classes < 2) throw DomainError("step profile: need at least 2 classes");
            if (majority_classes == 0 || majority_classes >= classes)
                throw DomainError("step profile: majority_classes must be in [1, classes)");
            if (n_major < n_minor) throw DomainError("step profile: n_major must be >= n_minor");
            if (n_minor == 0) throw DomainError("step profile: n_minor must be positive");
            std::vector<std::size_t> counts(classes, n_minor);
            for (std::size_t i = 0; i < majority_classes; ++i) counts[i] = n_major;
            return counts;
        }
        case Kind::Geometric:
            return geometric_counts(n_max, base, classes);
    }
    throw DomainError("unknown imbalance profile kind");
}

std::size_t ImbalanceProfile::class_count() const {
    return kind == Kind::BinaryRatio ? 2 : classes;
}

Dataset Dataset::build(Tensor features, std::vector<int> labels, std::size_t classes,
                       bool enforce_majority_convention) {
    if (classes < 2) throw DomainError("dataset: need at least 2 classes");
    if (features.rank() != 2 || features.rows() != labels.size())
        throw DimensionError("dataset: features must be n x d with one row per label");
    Dataset ds;
    ds.features = std::move(features);
    ds.labels = std::move(labels);
    ds.classes = classes;
    ds.class_indices.assign(classes, {});
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        const int y = ds.labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            throw DomainError("dataset: label out of range");
        ds.class_indices[static_cast<std::size_t>(y)].push_back(i);
    }
    ds.counts.resize(classes);
    ds.fractions.resize(classes);
    const double n = static_cast<double>(ds.labels.size());
    for (std::size_t l = 0; l < classes; ++l) {
        ds.counts[l] = ds.class_indices[l].size();
        ds.fractions[l] = static_cast<double>(ds.counts[l]) / n;
    }
    if (enforce_majority_convention) {
        for (std::size_t l = 1; l < classes; ++l)
            if (ds.counts[l] > ds.counts[0])
                throw DomainError("dataset: class 0 must be the (weak) majority");
    }
    return ds;
}

namespace {

std::vector<std::vector<double>> class_mean_layout(std::size_t classes, std::size_t dim,
                                                   double separation) {
    std::vector<std::vector<double>> means(classes, std::vector<double>(dim, 0.0));
    if (separation == 0.0) return means;
    if (dim >= classes) {
        // Scaled basis vectors: all pairwise distances equal `separation`.
        const double a = separation / std::sqrt(2.0);
        for (std::size_t l = 0; l < classes; ++l) means[l][l] = a;
    } else {
        for (std::size_t l = 0; l < classes; ++l)
            means[l][0] = static_cast<double>(l) * separation;
    }
    return means;
}

Dataset sample_classes(const std::vector<std::size_t>& counts,
                       const std::vector<std::vector<double>>& means, std::size_t dim,
                       SeededRng& rng) {
    std::size_t n = 0;
    for (auto c : counts) n += c;
    Tensor features({n, dim});
    std::vector<int> labels(n);
    std::size_t row = 0;
    for (std::size_t l = 0; l < counts.size(); ++l) {
        for (std::size_t k = 0; k < counts[l]; ++k, ++row) {
            labels[row] = static_cast<int>(l);
            for (std::size_t j = 0; j < dim; ++j)
                features.at(row, j) = means[l][j] + rng.normal();
        }
    }
    return Dataset::build(std::move(features), std::move(labels), counts.size());
}

}  // namespace

MixtureData make_gaussian_mixture(const ImbalanceProfile& profile, std::size_t dim,
                                  double separation, std::uint64_t seed) {
    if (dim == 0) throw DomainError("make_gaussian_mixture: dim must be >= 1");
    if (separation < 0.0) throw DomainError("make_gaussian_mixture: separation must be >= 0");
    const auto train_counts = profile.counts();
    const std::size_t classes = train_counts.size();
    auto means = class_mean_layout(classes, dim, separation);

    MixtureData out;
    out.class_means = means;
    SeededRng train_rng(seed, Stream::Data);
    out.train = sample_classes(train_counts, means, dim, train_rng);

    const std::size_t per_class_test =
        std::min<std::size_t>(*std::min_element(train_counts.begin(), train_counts.end()), 200);
    SeededRng test_rng(seed, Stream::TestData);
    out.test = sample_classes(std::vector<std::size_t>(classes, per_class_test), means, dim,
                              test_rng);
    return out;
}

BatchPlan plan_per_class_ratio_batches(const Dataset& ds, std::size_t n_b, SeededRng& rng) {
    if (n_b == 0) throw DomainError("plan_per_class_ratio_batches: n_b must be positive");
    for (std::size_t l = 0; l < ds.classes; ++l)
        if (ds.counts[l] < n_b)
            throw DomainError("plan_per_class_ratio_batches: class " + std::to_string(l) +
                              " has fewer examples than batches");
    BatchPlan plan;
    plan.scheme = BatchPlan::Scheme::PerClassRatio;
    plan.batch_counts.assign(ds.classes, n_b);
    plan.batch_sizes.resize(ds.classes);
    std::vector<std::vector<std::size_t>> shuffled(ds.classes);
    for (std::size_t l = 0; l < ds.classes; ++l) {
        shuffled[l] = ds.class_indices[l];
        rng.shuffle(shuffled[l]);
        plan.batch_sizes[l] = ds.counts[l] / n_b;
    }
    plan.steps.assign(n_b, std::vector<std::vector<std::size_t>>(ds.classes));
    for (std::size_t t = 0; t < n_b; ++t) {
        for (std::size_t l = 0; l < ds.classes; ++l) {
            const std::size_t s = plan.batch_sizes[l];
            plan.steps[t][l].assign(shuffled[l].begin() + static_cast<std::ptrdiff_t>(t * s),
                                    shuffled[l].begin() + static_cast<std::ptrdiff_t>((t + 1) * s));
        }
    }
    return plan;
}

BatchPlan plan_oversampled_batches(const Dataset& ds, std::size_t per_class_size, SeededRng& rng) {
    const std::size_t s = per_class_size;
    if (s == 0) throw DomainError("plan_oversampled_batches: per-class size must be positive");
    for (std::size_t l = 0; l < ds.classes; ++l)
        if (ds.counts[l] < s)
            throw DomainError("plan_oversampled_batches: class " + std::to_string(l) +
                              " has fewer examples than the per-class batch size");
    BatchPlan plan;
    plan.scheme = BatchPlan::Scheme::OversampledEqual;
    plan.batch_sizes.assign(ds.classes, s);
    plan.batch_counts.resize(ds.classes);
    std::vector<std::vector<std::size_t>> pool(ds.classes);
    std::vector<std::size_t> cursor(ds.classes, 0);
    for (std::size_t l = 0; l < ds.classes; ++l) {
        plan.batch_counts[l] = ds.counts[l] / s;
        pool[l] = ds.class_indices[l];
        rng.shuffle(pool[l]);
    }
    const std::size_t epoch_len = plan.batch_counts[0];  // class 0 is the majority
    plan.steps.assign(epoch_len, std::vector<std::vector<std::size_t>>(ds.classes));
    for (std::size_t i = 1; i <= epoch_len; ++i) {
        for (std::size_t l = 0; l < ds.classes; ++l) {
            auto& batch = plan.steps[i - 1][l];
            batch.assign(pool[l].begin() + static_cast<std::ptrdiff_t>(cursor[l] * s),
                         pool[l].begin() + static_cast<std::ptrdiff_t>((cursor[l] + 1) * s));
            ++cursor[l];
            if (i % plan.batch_counts[l] == 0 && i < epoch_len) {
                rng.shuffle(pool[l]);
                cursor[l] = 0;
                ++plan.regroups;
            }
        }
    }
    return plan;
}

BatchPlan plan_uniform_batches(const Dataset& ds, std::size_t n_b, SeededRng& rng) {
    if (n_b == 0 || ds.size() < n_b)
        throw DomainError("plan_uniform_batches: need at least one example per batch");
    BatchPlan plan;
    plan.scheme = BatchPlan::Scheme::Uniform;
    plan.batch_sizes.assign(ds.classes, 0);
    plan.batch_counts.assign(ds.classes, n_b);
    plan.composite_size = ds.size() / n_b;
    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    plan.steps.assign(n_b, std::vector<std::vector<std::size_t>>(ds.classes));
    for (std::size_t t = 0; t < n_b; ++t) {
        for (std::size_t k = 0; k < plan.composite_size; ++k) {
            const std::size_t idx = order[t * plan.composite_size + k];
            plan.steps[t][static_cast<std::size_t>(ds.labels[idx])].push_back(idx);
        }
    }
    return plan;
}

void export_csv(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    csv::Writer w(os);
    std::vector<std::string> header;
    for (std::size_t j = 0; j < ds.dim(); ++j) header.push_back("f" + std::to_string(j));
    header.emplace_back("label");
    w.row(header);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.dim(); ++j) w.field(ds.features.at(i, j));
        w.field(static_cast<std::int64_t>(ds.labels[i]));
        w.end_row();
    }
    if (!os) throw IoError("write failed: " + path);
}

Dataset import_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty dataset file: " + path);
    const std::size_t dim = csv::split_line(line).size() - 1;
    std::vector<double> values;
    std::vector<int> labels;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto fields = csv::split_line(line);
        if (fields.size() != dim + 1) throw IoError("ragged dataset row in " + path);
        for (std::size_t j = 0; j < dim; ++j) {
            double v = 0;
            auto res = std::from_chars(fields[j].data(), fields[j].data() + fields[j].size(), v);
            if (res.ec != std::errc()) throw IoError("bad numeric field in " + path);
            values.push_back(v);
        }
        labels.push_back(std::stoi(fields[dim]));
    }
    const std::size_t n = labels.size();
    int max_label = 0;
    for (int y : labels) max_label = std::max(max_label, y);
    return Dataset::build(Tensor({n, dim}, std::move(values)), std::move(labels),
                          static_cast<std::size_t>(max_label) + 1);
}

}  // namespace imbopt::data
