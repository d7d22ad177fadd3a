#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stc/error.hpp"
#include "stc/matrix.hpp"
#include "stc/random.hpp"

namespace stc {

enum class Activation { relu, identity };

inline const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

inline Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "identity") return Activation::identity;
    throw DataError("unknown activation '" + s + "'");
}

/// y = act(x W + b); weight is in_dim x out_dim, bias is 1 x out_dim.
struct DenseLayer {
    Matrix weight;
    Matrix bias;
    Activation activation = Activation::identity;

    [[nodiscard]] std::size_t in_dim() const { return weight.rows(); }
    [[nodiscard]] std::size_t out_dim() const { return weight.cols(); }
};

struct MlpParams {
    std::vector<DenseLayer> layers;

    /// sizes = {in, hidden..., out}; activations has one entry per layer.
    static MlpParams init(std::span<const std::size_t> sizes,
                          std::span<const Activation> activations, Rng& rng) {
        if (sizes.size() < 2 || activations.size() + 1 != sizes.size()) {
            throw UsageError("MlpParams::init: need sizes.size() == activations.size() + 1 >= 2");
        }
        MlpParams p;
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            const std::size_t fan_in = sizes[l];
            const std::size_t fan_out = sizes[l + 1];
            if (fan_in == 0 || fan_out == 0) throw UsageError("MlpParams::init: zero layer size");
            const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            DenseLayer layer{Matrix(fan_in, fan_out), Matrix(1, fan_out), activations[l]};
            for (double& w : layer.weight.values()) w = rng.uniform(-a, a);
            p.layers.push_back(std::move(layer));
        }
        return p;
    }

    [[nodiscard]] std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
    [[nodiscard]] std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

    friend bool operator==(const MlpParams& a, const MlpParams& b) {
        if (a.layers.size() != b.layers.size()) return false;
        for (std::size_t i = 0; i < a.layers.size(); ++i) {
            const auto& x = a.layers[i];
            const auto& y = b.layers[i];
            if (!(x.weight == y.weight) || !(x.bias == y.bias) || x.activation != y.activation) {
                return false;
            }
        }
        return true;
    }
};

/// Forward caches: the input and pre-activation of every layer.
struct MlpActivations {
    std::vector<Matrix> inputs;
    std::vector<Matrix> pre;
    Matrix output;
};

namespace detail {

inline Matrix dense_pre(const DenseLayer& layer, const Matrix& x) {
    Matrix z = matmul(x, layer.weight);
    const auto b = layer.bias.row(0);
    for (std::size_t i = 0; i < z.rows(); ++i) {
        auto r = z.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] += b[j];
    }
    return z;
}

inline Matrix activate(const Matrix& pre, Activation a) {
    Matrix out = pre;
    if (a == Activation::relu) {
        for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
    }
    return out;
}

inline void check_input(const MlpParams& params, const Matrix& input) {
    if (params.layers.empty()) throw UsageError("mlp: network has no layers");
    if (input.cols() != params.input_dim()) {
        throw UsageError("mlp: input has " + std::to_string(input.cols()) +
                         " columns, network expects " + std::to_string(params.input_dim()));
    }
}

}  // namespace detail

inline MlpActivations mlp_forward(const MlpParams& params, const Matrix& input) {
    detail::check_input(params, input);
    MlpActivations acts;
    acts.inputs.reserve(params.layers.size());
    acts.pre.reserve(params.layers.size());
    Matrix x = input;
    for (const auto& layer : params.layers) {
        Matrix z = detail::dense_pre(layer, x);
        Matrix y = detail::activate(z, layer.activation);
        acts.inputs.push_back(std::move(x));
        acts.pre.push_back(std::move(z));
        x = std::move(y);
    }
    acts.output = std::move(x);
    return acts;
}

/// Inference-only forward pass (no caches).
inline Matrix mlp_infer(const MlpParams& params, const Matrix& input) {
    detail::check_input(params, input);
    Matrix x = input;
    for (const auto& layer : params.layers) x = detail::activate(detail::dense_pre(layer, x), layer.activation);
    return x;
}

struct MlpGradients {
    std::vector<Matrix> weight;
    std::vector<Matrix> bias;
    Matrix input;
};

inline MlpGradients mlp_backward(const MlpParams& params, const MlpActivations& acts,
                                 const Matrix& output_grad) {
    const std::size_t n = params.layers.size();
    if (acts.inputs.size() != n || acts.pre.size() != n) {
        throw UsageError("mlp_backward: cache does not match network depth");
    }
    if (!output_grad.same_shape(acts.output)) {
        throw UsageError("mlp_backward: output gradient " + output_grad.shape_string() +
                         " does not match output " + acts.output.shape_string());
    }
    MlpGradients g;
    g.weight.resize(n);
    g.bias.resize(n);
    Matrix grad = output_grad;
    for (std::size_t l = n; l-- > 0;) {
        const auto& layer = params.layers[l];
        const Matrix& pre = acts.pre[l];
        if (pre.cols() != layer.out_dim() || acts.inputs[l].cols() != layer.in_dim()) {
            throw UsageError("mlp_backward: cache shape mismatch at layer " + std::to_string(l));
        }
        if (layer.activation == Activation::relu) {
            auto gv = grad.values();
            const auto pv = pre.values();
            for (std::size_t i = 0; i < gv.size(); ++i) {
                if (!(pv[i] > 0.0)) gv[i] = 0.0;
            }
        }
        g.weight[l] = matmul_tn(acts.inputs[l], grad);
        Matrix db(1, layer.out_dim());
        for (std::size_t i = 0; i < grad.rows(); ++i) {
            const auto r = grad.row(i);
            for (std::size_t j = 0; j < r.size(); ++j) db(0, j) += r[j];
        }
        g.bias[l] = std::move(db);
        grad = matmul_nt(grad, layer.weight);
    }
    g.input = std::move(grad);
    return g;
}

/// A named, mutable view of one parameter tensor.
struct ParamRef {
    std::string name;
    Matrix* value;
};

inline void append_params(std::vector<ParamRef>& out, const std::string& prefix, MlpParams& p) {
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        out.push_back({prefix + "." + std::to_string(l) + ".weight", &p.layers[l].weight});
        out.push_back({prefix + "." + std::to_string(l) + ".bias", &p.layers[l].bias});
    }
}

/// Gradients in the same order as append_params.
inline void append_grads(std::vector<Matrix>& out, MlpGradients&& g) {
    for (std::size_t l = 0; l < g.weight.size(); ++l) {
        out.push_back(std::move(g.weight[l]));
        out.push_back(std::move(g.bias[l]));
    }
}

struct AdamConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    std::size_t step = 0;
};

/// One bias-corrected Adam update. Moments are allocated lazily on the first call.
inline void adam_step(AdamState& state, std::span<const ParamRef> params,
                      std::span<const Matrix> grads) {
    if (params.size() != grads.size()) {
        throw UsageError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
    }
    if (state.first_moment.empty()) {
        for (const auto& p : params) {
            state.first_moment.emplace_back(p.value->rows(), p.value->cols());
            state.second_moment.emplace_back(p.value->rows(), p.value->cols());
        }
    }
    if (state.first_moment.size() != params.size()) {
        throw UsageError("adam_step: optimizer state does not match parameter list");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!grads[i].same_shape(*params[i].value) ||
            !state.first_moment[i].same_shape(*params[i].value)) {
            throw UsageError("adam_step: shape mismatch for " + params[i].name);
        }
        if (!grads[i].all_finite()) {
            throw NumericalError("adam_step: non-finite gradient for " + params[i].name);
        }
    }

    ++state.step;
    const auto& c = state.config;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto w = params[i].value->values();
        const auto g = grads[i].values();
        auto m = state.first_moment[i].values();
        auto v = state.second_moment[i].values();
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
            v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            w[j] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
        }
    }
}

/// Reduce-on-plateau for a minimized metric.
struct PlateauScheduler {
    double factor = 0.5;
    std::size_t patience = 10;
    double min_lr = 1e-6;
    double threshold = 1e-4;  // absolute improvement that resets the stall counter
    double best_metric = std::numeric_limits<double>::infinity();
    std::size_t stall_count = 0;

    /// Returns the learning rate to use after observing `metric`.
    double step(double lr, double metric) {
        if (!std::isfinite(metric)) throw NumericalError("plateau_step: non-finite metric");
        if (metric < best_metric - threshold) {
            best_metric = metric;
            stall_count = 0;
            return lr;
        }
        if (++stall_count >= patience) {
            stall_count = 0;
            return std::max(lr * factor, min_lr);
        }
        return lr;
    }
};

struct CrossEntropy {
    double loss = 0.0;  // mean over rows
    Matrix grad;        // d loss / d logits
};

inline CrossEntropy softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
    if (logits.rows() != labels.size()) throw UsageError("softmax_cross_entropy: label count mismatch");
    if (logits.rows() == 0) throw UsageError("softmax_cross_entropy: empty batch");
    CrossEntropy ce;
    ce.grad = Matrix(logits.rows(), logits.cols());
    const double inv_n = 1.0 / static_cast<double>(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto z = logits.row(i);
        const auto y = static_cast<std::size_t>(labels[i]);
        if (labels[i] < 0 || y >= z.size()) throw UsageError("softmax_cross_entropy: label out of range");
        const double mx = *std::max_element(z.begin(), z.end());
        double denom = 0.0;
        for (double v : z) denom += std::exp(v - mx);
        const double lse = mx + std::log(denom);
        ce.loss += (lse - z[y]) * inv_n;
        auto g = ce.grad.row(i);
        for (std::size_t j = 0; j < z.size(); ++j) g[j] = std::exp(z[j] - lse) * inv_n;
        g[y] -= inv_n;
    }
    return ce;
}

inline std::vector<int> argmax_rows(const Matrix& m) {
    std::vector<int> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto r = m.row(i);
        out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    return out;
}

inline double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size() || truth.empty()) {
        throw UsageError("accuracy: empty or mismatched label vectors");
    }
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i] ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

/// Feature standardization fitted on a training matrix (population statistics).
struct FeatureScaler {
    std::vector<double> mean;
    std::vector<double> scale;

    static FeatureScaler fit(const Matrix& x) {
        FeatureScaler s;
        s.mean.assign(x.cols(), 0.0);
        s.scale.assign(x.cols(), 1.0);
        const double n = static_cast<double>(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) s.mean[j] += x(i, j);
        }
        for (double& m : s.mean) m /= n;
        std::vector<double> sq(x.cols(), 0.0);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) {
                const double d = x(i, j) - s.mean[j];
                sq[j] += d * d;
            }
        }
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double sd = std::sqrt(sq[j] / n);
            s.scale[j] = sd > 1e-12 ? sd : 1.0;
        }
        return s;
    }

    [[nodiscard]] Matrix apply(const Matrix& x) const {
        if (x.cols() != mean.size()) throw UsageError("FeatureScaler: feature width mismatch");
        Matrix out = x;
        for (std::size_t i = 0; i < out.rows(); ++i) {
            auto r = out.row(i);
            for (std::size_t j = 0; j < r.size(); ++j) r[j] = (r[j] - mean[j]) / scale[j];
        }
        return out;
    }
};

struct LogisticConfig {
    double reg = 1e-4;  // L2 penalty on weights
    std::size_t epochs = 300;
    double lr = 0.01;
};

/// Multinomial logistic regression on standardized features.
struct LinearClassifier {
    FeatureScaler scaler;
    Matrix weight;  // features x classes
    Matrix bias;    // 1 x classes

    [[nodiscard]] Matrix logits(const Matrix& features) const {
        Matrix z = matmul(scaler.apply(features), weight);
        for (std::size_t i = 0; i < z.rows(); ++i) {
            auto r = z.row(i);
            for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias(0, j);
        }
        return z;
    }

    [[nodiscard]] std::vector<int> predict(const Matrix& features) const {
        return argmax_rows(logits(features));
    }
};

/// Full-batch Adam on mean softmax cross-entropy plus (reg / 2) * ||W||^2.
/// Weights start at zero, so the result is deterministic.
inline LinearClassifier train_logistic(const Matrix& features, std::span<const int> labels,
                                       const LogisticConfig& cfg) {
    if (features.rows() != labels.size() || labels.empty()) {
        throw UsageError("train_logistic: feature rows and labels must match and be non-empty");
    }
    if (!features.all_finite()) throw NumericalError("train_logistic: non-finite features");
    int max_label = -1;
    for (int y : labels) {
        if (y < 0) throw UsageError("train_logistic: negative label");
        max_label = std::max(max_label, y);
    }
    const bool single_class =
        std::all_of(labels.begin(), labels.end(), [&](int y) { return y == labels.front(); });
    if (single_class) throw DataError("train_logistic: labels contain a single class");

    const auto classes = static_cast<std::size_t>(max_label + 1);
    LinearClassifier clf;
    clf.scaler = FeatureScaler::fit(features);
    clf.weight = Matrix(features.cols(), classes);
    clf.bias = Matrix(1, classes);
    const Matrix x = clf.scaler.apply(features);

    AdamState adam;
    adam.config.lr = cfg.lr;
    std::vector<ParamRef> params{{"probe.weight", &clf.weight}, {"probe.bias", &clf.bias}};
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        Matrix z = matmul(x, clf.weight);
        for (std::size_t i = 0; i < z.rows(); ++i) {
            auto r = z.row(i);
            for (std::size_t j = 0; j < r.size(); ++j) r[j] += clf.bias(0, j);
        }
        const CrossEntropy ce = softmax_cross_entropy(z, labels);
        std::vector<Matrix> grads;
        Matrix gw = matmul_tn(x, ce.grad);
        auto gwv = gw.values();
        const auto wv = clf.weight.values();
        for (std::size_t j = 0; j < gwv.size(); ++j) gwv[j] += cfg.reg * wv[j];
        Matrix gb(1, classes);
        for (std::size_t i = 0; i < ce.grad.rows(); ++i) {
            for (std::size_t j = 0; j < classes; ++j) gb(0, j) += ce.grad(i, j);
        }
        grads.push_back(std::move(gw));
        grads.push_back(std::move(gb));
        adam_step(adam, params, grads);
    }
    return clf;
}

}  // namespace stc
