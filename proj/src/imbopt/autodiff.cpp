#include "imbopt/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace imbopt::ad {

int Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    evaluated_ = false;
    return static_cast<int>(nodes_.size()) - 1;
}

void Graph::check_id(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes_.size()))
        throw StateError("autodiff: node id out of range");
}

int Graph::input(Tensor value) {
    Node n;
    n.op = Op::Input;
    n.shape = value.shape();
    n.value = std::move(value);
    return push(std::move(n));
}

int Graph::param(Tensor value) {
    Node n;
    n.op = Op::Param;
    n.shape = value.shape();
    n.value = std::move(value);
    int id = push(std::move(n));
    param_ids_.push_back(id);
    return id;
}

int Graph::linear(int x, int w, int b) {
    check_id(x);
    check_id(w);
    check_id(b);
    const auto& xs = nodes_[static_cast<std::size_t>(x)].shape;
    const auto& ws = nodes_[static_cast<std::size_t>(w)].shape;
    const auto& bs = nodes_[static_cast<std::size_t>(b)].shape;
    if (xs.size() != 2 || ws.size() != 2 || bs.size() != 1)
        throw DimensionError("linear: expected matrix inputs and vector bias");
    if (xs[1] != ws[1] || ws[0] != bs[0])
        throw DimensionError("linear: incompatible shapes");
    Node n;
    n.op = Op::Linear;
    n.in = {x, w, b};
    n.shape = {xs[0], ws[0]};
    return push(std::move(n));
}

int Graph::relu(int x) {
    check_id(x);
    Node n;
    n.op = Op::Relu;
    n.in = {x};
    n.shape = nodes_[static_cast<std::size_t>(x)].shape;
    return push(std::move(n));
}

int Graph::tanh_act(int x) {
    check_id(x);
    Node n;
    n.op = Op::Tanh;
    n.in = {x};
    n.shape = nodes_[static_cast<std::size_t>(x)].shape;
    return push(std::move(n));
}

int Graph::softmax_xent(int logits, std::vector<int> labels) {
    check_id(logits);
    const auto& ls = nodes_[static_cast<std::size_t>(logits)].shape;
    if (ls.size() != 2) throw DimensionError("softmax_xent: logits must be B x L");
    if (labels.size() != ls[0])
        throw DimensionError("softmax_xent: one label per logits row required");
    const int classes = static_cast<int>(ls[1]);
    for (int y : labels)
        if (y < 0 || y >= classes) throw DomainError("softmax_xent: label out of range");
    Node n;
    n.op = Op::SoftmaxXent;
    n.in = {logits};
    n.labels = std::move(labels);
    n.shape = {ls[0]};
    return push(std::move(n));
}

int Graph::subset_mean(int values, std::vector<std::size_t> subset, double normalizer) {
    check_id(values);
    const auto& vs = nodes_[static_cast<std::size_t>(values)].shape;
    std::size_t total = 1;
    for (std::size_t d : vs) total *= d;
    if (normalizer <= 0.0) throw DomainError("subset_mean: normalizer must be positive");
    for (std::size_t i : subset)
        if (i >= total) throw DomainError("subset_mean: subset index out of range");
    Node n;
    n.op = Op::SubsetMean;
    n.in = {values};
    n.subset = std::move(subset);
    n.normalizer = normalizer;
    n.shape = {1};
    return push(std::move(n));
}

double Graph::forward() {
    if (nodes_.empty()) throw StateError("forward: empty graph");
    empty_subset_warning_ = false;
    for (auto& n : nodes_) {
        switch (n.op) {
            case Op::Input:
            case Op::Param:
                break;
            case Op::Linear: {
                const Tensor& x = nodes_[static_cast<std::size_t>(n.in[0])].value;
                const Tensor& w = nodes_[static_cast<std::size_t>(n.in[1])].value;
                const Tensor& b = nodes_[static_cast<std::size_t>(n.in[2])].value;
                const std::size_t rows = x.rows(), inner = x.cols(), cols = w.rows();
                if (!n.value.same_shape(Tensor({rows, cols}))) n.value = Tensor({rows, cols});
                for (std::size_t i = 0; i < rows; ++i) {
                    for (std::size_t j = 0; j < cols; ++j) {
                        double acc = b[j];
                        for (std::size_t k = 0; k < inner; ++k)
                            acc += x.at(i, k) * w.at(j, k);
                        n.value.at(i, j) = acc;
                    }
                }
                break;
            }
            case Op::Relu: {
                const Tensor& x = nodes_[static_cast<std::size_t>(n.in[0])].value;
                if (!n.value.same_shape(x)) n.value = Tensor(x.shape());
                for (std::size_t i = 0; i < x.size(); ++i)
                    n.value[i] = x[i] > 0.0 ? x[i] : 0.0;  // subgradient at 0 is 0
                break;
            }
            case Op::Tanh: {
                const Tensor& x = nodes_[static_cast<std::size_t>(n.in[0])].value;
                if (!n.value.same_shape(x)) n.value = Tensor(x.shape());
                for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = std::tanh(x[i]);
                break;
            }
            case Op::SoftmaxXent: {
                const Tensor& z = nodes_[static_cast<std::size_t>(n.in[0])].value;
                const std::size_t rows = z.rows(), cols = z.cols();
                if (n.value.size() != rows) n.value = Tensor({rows});
                if (!n.aux.same_shape(z)) n.aux = Tensor(z.shape());
                for (std::size_t i = 0; i < rows; ++i) {
                    double m = z.at(i, 0);
                    for (std::size_t j = 1; j < cols; ++j) m = std::max(m, z.at(i, j));
                    double sum = 0.0;
                    for (std::size_t j = 0; j < cols; ++j) sum += std::exp(z.at(i, j) - m);
                    const double lse = m + std::log(sum);
                    for (std::size_t j = 0; j < cols; ++j)
                        n.aux.at(i, j) = std::exp(z.at(i, j) - lse);
                    n.value[i] = lse - z.at(i, static_cast<std::size_t>(n.labels[i]));
                }
                break;
            }
            case Op::SubsetMean: {
                const Tensor& v = nodes_[static_cast<std::size_t>(n.in[0])].value;
                double acc = 0.0;
                for (std::size_t i : n.subset) acc += v[i];
                if (n.subset.empty()) empty_subset_warning_ = true;
                if (n.value.size() != 1) n.value = Tensor({1});
                n.value[0] = acc / n.normalizer;
                break;
            }
        }
    }
    const Tensor& out = nodes_.back().value;
    if (out.size() != 1) throw StateError("forward: terminal node is not a scalar");
    evaluated_ = true;
    return out[0];
}

GradientRecord Graph::backward() {
    if (!evaluated_) throw StateError("backward called before forward");
    for (auto& n : nodes_) {
        n.grad = Tensor(n.value.shape());  // zero-filled
    }
    nodes_.back().grad[0] = 1.0;
    for (std::size_t idx = nodes_.size(); idx-- > 0;) {
        Node& n = nodes_[idx];
        switch (n.op) {
            case Op::Input:
            case Op::Param:
                break;
            case Op::Linear: {
                Node& xn = nodes_[static_cast<std::size_t>(n.in[0])];
                Node& wn = nodes_[static_cast<std::size_t>(n.in[1])];
                Node& bn = nodes_[static_cast<std::size_t>(n.in[2])];
                const std::size_t rows = xn.value.rows(), inner = xn.value.cols(),
                                  cols = wn.value.rows();
                for (std::size_t i = 0; i < rows; ++i) {
                    for (std::size_t j = 0; j < cols; ++j) {
                        const double g = n.grad.at(i, j);
                        if (g == 0.0) continue;
                        bn.grad[j] += g;
                        for (std::size_t k = 0; k < inner; ++k) {
                            xn.grad.at(i, k) += g * wn.value.at(j, k);
                            wn.grad.at(j, k) += g * xn.value.at(i, k);
                        }
                    }
                }
                break;
            }
            case Op::Relu: {
                Node& xn = nodes_[static_cast<std::size_t>(n.in[0])];
                for (std::size_t i = 0; i < n.grad.size(); ++i)
                    if (xn.value[i] > 0.0) xn.grad[i] += n.grad[i];
                break;
            }
            case Op::Tanh: {
                Node& xn = nodes_[static_cast<std::size_t>(n.in[0])];
                for (std::size_t i = 0; i < n.grad.size(); ++i)
                    xn.grad[i] += n.grad[i] * (1.0 - n.value[i] * n.value[i]);
                break;
            }
            case Op::SoftmaxXent: {
                Node& zn = nodes_[static_cast<std::size_t>(n.in[0])];
                const std::size_t rows = zn.value.rows(), cols = zn.value.cols();
                for (std::size_t i = 0; i < rows; ++i) {
                    const double g = n.grad[i];
                    if (g == 0.0) continue;
                    for (std::size_t j = 0; j < cols; ++j) {
                        const double onehot =
                            (static_cast<std::size_t>(n.labels[i]) == j) ? 1.0 : 0.0;
                        zn.grad.at(i, j) += g * (n.aux.at(i, j) - onehot);
                    }
                }
                break;
            }
            case Op::SubsetMean: {
                Node& vn = nodes_[static_cast<std::size_t>(n.in[0])];
                const double g = n.grad[0] / n.normalizer;
                for (std::size_t i : n.subset) vn.grad[i] += g;
                break;
            }
        }
    }
    GradientRecord rec;
    rec.params.reserve(param_ids_.size());
    for (int id : param_ids_) rec.params.push_back(nodes_[static_cast<std::size_t>(id)].grad);
    return rec;
}

Tensor& Graph::param_value(std::size_t i) {
    if (i >= param_ids_.size()) throw StateError("param_value: index out of range");
    return nodes_[static_cast<std::size_t>(param_ids_[i])].value;
}

const Tensor& Graph::value(int id) const {
    check_id(id);
    return nodes_[static_cast<std::size_t>(id)].value;
}

double Graph::finite_difference_check(SeededRng& rng, double h, std::size_t min_coords) {
    if (!(h >= 1e-8 && h <= 1e-3))
        throw DomainError("finite_difference_check: h must lie in [1e-8, 1e-3]");
    forward();
    const GradientRecord rec = backward();
    std::size_t total = 0;
    for (const auto& p : rec.params) total += p.size();
    if (total == 0) throw StateError("finite_difference_check: no parameters");
    const std::size_t n_checks = std::min(total, std::max<std::size_t>(min_coords, 1));

    double max_rel = 0.0;
    for (std::size_t k = 0; k < n_checks; ++k) {
        std::size_t flat = static_cast<std::size_t>(rng.uniform_below(total));
        std::size_t pi = 0;
        while (flat >= rec.params[pi].size()) {
            flat -= rec.params[pi].size();
            ++pi;
        }
        Tensor& pv = param_value(pi);
        const double saved = pv[flat];
        pv[flat] = saved + h;
        const double fp = forward();
        pv[flat] = saved - h;
        const double fm = forward();
        pv[flat] = saved;
        const double fd = (fp - fm) / (2.0 * h);
        const double g = rec.params[pi][flat];
        max_rel = std::max(max_rel, std::abs(fd - g) / (std::abs(g) + 1e-8));
    }
    forward();  // restore cached values for the unperturbed point
    return max_rel;
}

}  // namespace imbopt::ad
