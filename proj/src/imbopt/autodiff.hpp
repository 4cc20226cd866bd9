#pragma once

#include <vector>

#include "imbopt/rng.hpp"
#include "imbopt/tensor.hpp"

namespace imbopt::ad {

/// Per-parameter gradients, shape-congruent with the graph's parameters.
struct GradientRecord {
    std::vector<Tensor> params;
};

/// Reverse-mode tape over a static feed-forward graph: linear layers,
/// elementwise relu/tanh, fused softmax cross-entropy per example, and a
/// subset mean with caller-supplied normalizer. A graph is built once per
/// batch; forward() may be re-run after mutating inputs or parameters
/// (finite differencing relies on this).
class Graph {
public:
    int input(Tensor value);
    int param(Tensor value);
    /// x: B x d_in, w: d_out x d_in, b: d_out  ->  x * w^T + b
    int linear(int x, int w, int b);
    int relu(int x);
    int tanh_act(int x);
    /// logits: B x L -> per-example cross-entropy losses (length B),
    /// computed with log-sum-exp stabilization.
    int softmax_xent(int logits, std::vector<int> labels);
    /// sum of the subset's entries divided by `normalizer` (scalar output).
    int subset_mean(int values, std::vector<std::size_t> subset, double normalizer);

    /// Evaluates every node; returns the terminal node's scalar value.
    double forward();
    /// Reverse pass for the last forward(); StateError if forward never ran.
    GradientRecord backward();

    bool empty_subset_warning() const { return empty_subset_warning_; }
    std::size_t param_nodes() const { return param_ids_.size(); }
    Tensor& param_value(std::size_t i);
    const Tensor& value(int id) const;

    /// Max over >= min_coords sampled parameter coordinates of
    /// |central difference - backward gradient| / (|gradient| + 1e-8).
    double finite_difference_check(SeededRng& rng, double h, std::size_t min_coords = 50);

private:
    enum class Op { Input, Param, Linear, Relu, Tanh, SoftmaxXent, SubsetMean };

    struct Node {
        Op op;
        std::vector<int> in;
        std::vector<std::size_t> shape;   // propagated at build time
        Tensor value;
        Tensor grad;
        Tensor aux;                       // SoftmaxXent: probabilities
        std::vector<int> labels;          // SoftmaxXent
        std::vector<std::size_t> subset;  // SubsetMean
        double normalizer = 1.0;          // SubsetMean
    };

    int push(Node n);
    void check_id(int id) const;

    std::vector<Node> nodes_;
    std::vector<int> param_ids_;
    bool evaluated_ = false;
    bool empty_subset_warning_ = false;
};

}  // namespace imbopt::ad
