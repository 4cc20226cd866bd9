#include "imbopt/model.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace imbopt::model {

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    throw DomainError("unknown activation: " + s);
}

std::string to_string(Activation a) { return a == Activation::Relu ? "relu" : "tanh"; }

void ModelSpec::validate() const {
    if (input_dim == 0) throw DomainError("model: input_dim must be >= 1");
    if (classes < 2) throw DomainError("model: need at least 2 classes");
    for (std::size_t w : hidden)
        if (w == 0) throw DomainError("model: hidden widths must be >= 1");
    if (init_scale < 0.0) throw DomainError("model: init_scale must be >= 0");
}

std::vector<std::size_t> ModelSpec::layer_widths() const {
    std::vector<std::size_t> widths = hidden;
    widths.push_back(classes);
    return widths;
}

Classifier::Classifier(ModelSpec spec, std::vector<Tensor> params)
    : spec_(std::move(spec)), params_(std::move(params)) {
    spec_.validate();
    const auto widths = spec_.layer_widths();
    if (params_.size() != 2 * widths.size())
        throw DimensionError("classifier: wrong number of parameter tensors");
    std::size_t fan_in = spec_.input_dim;
    for (std::size_t k = 0; k < widths.size(); ++k) {
        const Tensor& w = params_[2 * k];
        const Tensor& b = params_[2 * k + 1];
        if (w.rank() != 2 || w.rows() != widths[k] || w.cols() != fan_in || b.size() != widths[k])
            throw DimensionError("classifier: parameter shape mismatch at layer " +
                                 std::to_string(k));
        fan_in = widths[k];
    }
}

Classifier Classifier::initialize(const ModelSpec& spec, SeededRng& rng) {
    spec.validate();
    std::vector<Tensor> params;
    std::size_t fan_in = spec.input_dim;
    for (std::size_t width : spec.layer_widths()) {
        const double scale =
            spec.init_scale > 0.0 ? spec.init_scale : 1.0 / std::sqrt(static_cast<double>(fan_in));
        Tensor w({width, fan_in});
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = scale * rng.normal();
        params.push_back(std::move(w));
        params.emplace_back(std::vector<std::size_t>{width});  // zero bias
        fan_in = width;
    }
    return Classifier(spec, std::move(params));
}

std::size_t Classifier::param_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
}

std::vector<double> Classifier::flatten() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    for (const auto& p : params_) flat.insert(flat.end(), p.data().begin(), p.data().end());
    return flat;
}

void Classifier::assign_flat(const std::vector<double>& flat) {
    if (flat.size() != param_count())
        throw DimensionError("assign_flat: length mismatch");
    std::size_t off = 0;
    for (auto& p : params_) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                  flat.begin() + static_cast<std::ptrdiff_t>(off + p.size()), p.data().begin());
        off += p.size();
    }
}

ad::Graph Classifier::build_graph(const Tensor& features, const std::vector<int>& labels,
                                  std::vector<std::size_t> subset, double normalizer) const {
    ad::Graph g;
    int h = g.input(features);
    const auto widths = spec_.layer_widths();
    for (std::size_t k = 0; k < widths.size(); ++k) {
        const int w = g.param(params_[2 * k]);
        const int b = g.param(params_[2 * k + 1]);
        h = g.linear(h, w, b);
        if (k + 1 < widths.size())
            h = spec_.activation == Activation::Relu ? g.relu(h) : g.tanh_act(h);
    }
    const int losses = g.softmax_xent(h, labels);
    g.subset_mean(losses, std::move(subset), normalizer);
    return g;
}

Tensor Classifier::logits(const Tensor& features) const {
    // Loss head needs labels; evaluate through a throwaway graph instead.
    const std::size_t rows = features.rows();
    ad::Graph g;
    int h = g.input(features);
    const auto widths = spec_.layer_widths();
    int logits_id = h;
    for (std::size_t k = 0; k < widths.size(); ++k) {
        const int w = g.param(params_[2 * k]);
        const int b = g.param(params_[2 * k + 1]);
        h = g.linear(h, w, b);
        logits_id = h;
        if (k + 1 < widths.size())
            h = spec_.activation == Activation::Relu ? g.relu(h) : g.tanh_act(h);
    }
    std::vector<int> dummy_labels(rows, 0);
    const int losses = g.softmax_xent(h, dummy_labels);
    g.subset_mean(losses, {}, 1.0);
    g.forward();
    return g.value(logits_id);
}

std::vector<int> Classifier::predict(const Tensor& features) const {
    const Tensor z = logits(features);
    std::vector<int> out(z.rows());
    for (std::size_t i = 0; i < z.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < z.cols(); ++j)
            if (z.at(i, j) > z.at(i, best)) best = j;
        out[i] = static_cast<int>(best);
    }
    return out;
}

namespace {

// Subset evaluations run on a gathered copy of just the selected rows, so a
// small batch never pays for the whole dataset's forward pass.
struct GatheredBatch {
    Tensor features;
    std::vector<int> labels;
    std::vector<std::size_t> all;
};

GatheredBatch gather_rows(const Tensor& features, const std::vector<int>& labels,
                          const std::vector<std::size_t>& subset) {
    const std::size_t d = features.cols();
    GatheredBatch out;
    out.features = Tensor({subset.size(), d});
    out.labels.resize(subset.size());
    out.all.resize(subset.size());
    for (std::size_t k = 0; k < subset.size(); ++k) {
        const std::size_t i = subset[k];
        if (i >= features.rows()) throw DomainError("subset index out of range");
        std::copy(features.data().begin() + static_cast<std::ptrdiff_t>(i * d),
                  features.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * d),
                  out.features.data().begin() + static_cast<std::ptrdiff_t>(k * d));
        out.labels[k] = labels[i];
        out.all[k] = k;
    }
    return out;
}

}  // namespace

double Classifier::subset_loss(const Tensor& features, const std::vector<int>& labels,
                               const std::vector<std::size_t>& subset, double normalizer) const {
    if (subset.empty()) return 0.0;
    GatheredBatch b = gather_rows(features, labels, subset);
    ad::Graph g = build_graph(b.features, b.labels, std::move(b.all), normalizer);
    return g.forward();
}

std::vector<double> Classifier::subset_gradient(const Tensor& features,
                                                const std::vector<int>& labels,
                                                const std::vector<std::size_t>& subset,
                                                double normalizer) const {
    if (subset.empty()) return std::vector<double>(param_count(), 0.0);
    GatheredBatch b = gather_rows(features, labels, subset);
    ad::Graph g = build_graph(b.features, b.labels, std::move(b.all), normalizer);
    g.forward();
    const ad::GradientRecord rec = g.backward();
    std::vector<double> flat;
    flat.reserve(param_count());
    for (const auto& p : rec.params) flat.insert(flat.end(), p.data().begin(), p.data().end());
    return flat;
}

double PerClassGradients::cos_pair(std::size_t a, std::size_t b) const {
    if (degenerate[a] || degenerate[b])
        throw DomainError("cos_pair: degenerate per-class gradient");
    return cosine_angle(grads[a], grads[b]);
}

namespace {

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

}  // namespace

double per_class_loss(const Classifier& c, const data::Dataset& ds, std::size_t l) {
    if (l >= ds.classes) throw DomainError("per_class_loss: unknown class");
    return c.subset_loss(ds.features, ds.labels, ds.class_indices[l],
                         static_cast<double>(ds.size()));
}

double full_loss(const Classifier& c, const data::Dataset& ds) {
    return c.subset_loss(ds.features, ds.labels, all_indices(ds.size()),
                         static_cast<double>(ds.size()));
}

std::vector<double> per_class_gradient(const Classifier& c, const data::Dataset& ds,
                                       std::size_t l, GradConvention convention) {
    if (l >= ds.classes) throw DomainError("per_class_gradient: unknown class");
    const auto& subset = ds.class_indices[l];
    if (subset.empty()) return std::vector<double>(c.param_count(), 0.0);
    const double normalizer = convention == GradConvention::DatasetSize
                                  ? static_cast<double>(ds.size())
                                  : static_cast<double>(subset.size());
    return c.subset_gradient(ds.features, ds.labels, subset, normalizer);
}

std::optional<std::vector<double>> class_batch_gradient(const Classifier& c,
                                                        const data::Dataset& ds,
                                                        const std::vector<std::size_t>& subset,
                                                        GradConvention convention) {
    if (subset.empty()) return std::nullopt;
    const int label = ds.labels[subset.front()];
    for (std::size_t i : subset)
        if (ds.labels[i] != label)
            throw DomainError("class_batch_gradient: subset spans multiple classes");
    const double normalizer = convention == GradConvention::DatasetSize
                                  ? static_cast<double>(ds.size())
                                  : static_cast<double>(subset.size());
    return c.subset_gradient(ds.features, ds.labels, subset, normalizer);
}

std::vector<double> full_gradient(const Classifier& c, const data::Dataset& ds) {
    return c.subset_gradient(ds.features, ds.labels, all_indices(ds.size()),
                             static_cast<double>(ds.size()));
}

PerClassGradients per_class_gradients(const Classifier& c, const data::Dataset& ds,
                                      GradConvention convention) {
    PerClassGradients out;
    out.grads.resize(ds.classes);
    out.norms.resize(ds.classes);
    out.degenerate.resize(ds.classes);
    for (std::size_t l = 0; l < ds.classes; ++l) {
        out.grads[l] = per_class_gradient(c, ds, l, convention);
        out.norms[l] = l2_norm(out.grads[l]);
        out.degenerate[l] = out.norms[l] <= kNormEpsilon;
    }
    return out;
}

void save_checkpoint(const Classifier& c, const std::string& path) {
    nlohmann::json j;
    j["format"] = "imbopt-checkpoint";
    j["version"] = 1;
    j["input_dim"] = c.spec().input_dim;
    j["hidden"] = c.spec().hidden;
    j["activation"] = to_string(c.spec().activation);
    j["classes"] = c.spec().classes;
    j["init_scale"] = c.spec().init_scale;
    j["params"] = c.flatten();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << j.dump(2) << '\n';
}

Classifier load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    nlohmann::json j;
    is >> j;
    if (j.value("format", "") != "imbopt-checkpoint" || j.value("version", 0) != 1)
        throw IoError("not a version-1 checkpoint: " + path);
    ModelSpec spec;
    spec.input_dim = j.at("input_dim").get<std::size_t>();
    spec.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    spec.activation = activation_from_string(j.at("activation").get<std::string>());
    spec.classes = j.at("classes").get<std::size_t>();
    spec.init_scale = j.at("init_scale").get<double>();
    SeededRng dummy(0, 0);
    Classifier c = Classifier::initialize(spec, dummy);
    c.assign_flat(j.at("params").get<std::vector<double>>());
    return c;
}

}  // namespace imbopt::model
