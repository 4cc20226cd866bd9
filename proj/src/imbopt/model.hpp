#pragma once

#include <optional>
#include <string>
#include <vector>

#include "imbopt/autodiff.hpp"
#include "imbopt/dataset.hpp"
#include "imbopt/rng.hpp"
#include "imbopt/tensor.hpp"

namespace imbopt::model {

enum class Activation { Relu, Tanh };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

/// Linear softmax when hidden is empty, otherwise an MLP with the given
/// hidden widths and one activation kind throughout.
struct ModelSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;
    Activation activation = Activation::Tanh;
    std::size_t classes = 2;
    double init_scale = 0.0;  // 0 -> 1/sqrt(fan_in) per layer

    void validate() const;
    std::vector<std::size_t> layer_widths() const;  // hidden... , classes
};

/// How a per-class gradient is normalized.
///  - DatasetSize: divide by the full dataset size n; the per-class pieces
///    then sum exactly to the full gradient.
///  - ClassBatchMean: divide by the number of class-l elements used; the
///    mini-batch convention.
enum class GradConvention { DatasetSize, ClassBatchMean };

class Classifier {
public:
    Classifier(ModelSpec spec, std::vector<Tensor> params);

    /// Zero biases, weights i.i.d. Gaussian with std init_scale (or
    /// 1/sqrt(fan_in) when unset), drawn layer by layer in row-major order.
    static Classifier initialize(const ModelSpec& spec, SeededRng& rng);

    const ModelSpec& spec() const { return spec_; }
    const std::vector<Tensor>& params() const { return params_; }
    std::size_t param_count() const;

    /// Flattened parameter vector: W0 (row-major), b0, W1, b1, ...
    std::vector<double> flatten() const;
    void assign_flat(const std::vector<double>& flat);

    /// Graph whose terminal node is sum_{i in subset} f_i / normalizer.
    ad::Graph build_graph(const Tensor& features, const std::vector<int>& labels,
                          std::vector<std::size_t> subset, double normalizer) const;

    Tensor logits(const Tensor& features) const;
    std::vector<int> predict(const Tensor& features) const;  // argmax, ties to lowest index

    double subset_loss(const Tensor& features, const std::vector<int>& labels,
                       const std::vector<std::size_t>& subset, double normalizer) const;
    std::vector<double> subset_gradient(const Tensor& features, const std::vector<int>& labels,
                                        const std::vector<std::size_t>& subset,
                                        double normalizer) const;

private:
    ModelSpec spec_;
    std::vector<Tensor> params_;  // W0, b0, W1, b1, ...
};

/// The family {grad f^(l)} with norms; degenerate marks norms <= kNormEpsilon.
struct PerClassGradients {
    std::vector<std::vector<double>> grads;
    std::vector<double> norms;
    std::vector<bool> degenerate;

    std::size_t classes() const { return grads.size(); }
    /// DomainError if either class is degenerate.
    double cos_pair(std::size_t a, std::size_t b) const;
};

/// f^(l) = (1/n) sum_{i in C_l} f_i  (divided by the total dataset size).
double per_class_loss(const Classifier& c, const data::Dataset& ds, std::size_t l);
double full_loss(const Classifier& c, const data::Dataset& ds);

std::vector<double> per_class_gradient(const Classifier& c, const data::Dataset& ds,
                                       std::size_t l, GradConvention convention);

/// Batch-mean gradient over `subset`, which must be nonempty and single-class;
/// empty subset returns nullopt (skip-class signal).
std::optional<std::vector<double>> class_batch_gradient(const Classifier& c,
                                                        const data::Dataset& ds,
                                                        const std::vector<std::size_t>& subset,
                                                        GradConvention convention);

std::vector<double> full_gradient(const Classifier& c, const data::Dataset& ds);

PerClassGradients per_class_gradients(const Classifier& c, const data::Dataset& ds,
                                      GradConvention convention);

void save_checkpoint(const Classifier& c, const std::string& path);
Classifier load_checkpoint(const std::string& path);

}  // namespace imbopt::model
