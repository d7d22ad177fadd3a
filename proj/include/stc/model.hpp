#pragma once

#include <span>
#include <string>
#include <vector>

#include "stc/error.hpp"
#include "stc/matrix.hpp"
#include "stc/nn.hpp"
#include "stc/random.hpp"
#include "stc/sample.hpp"
#include "stc/symbolize.hpp"

namespace stc {

struct ModelDims {
    std::size_t channels = 9;
    std::size_t length = 256;
    std::size_t n_symbols = 64;
    std::size_t h_dim = 128;
    std::size_t z_dim = 32;
    std::vector<std::size_t> encoder_hidden{256};
    std::vector<std::size_t> projector_hidden{64};

    [[nodiscard]] std::size_t time_input_dim() const { return channels * length; }
    [[nodiscard]] std::size_t symbol_input_dim() const { return channels * n_symbols; }

    friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Time encoder, symbol encoder and their projectors into a shared z space,
/// plus the channel statistics used to standardize inputs and place cutlines.
struct StcModel {
    ModelDims dims;
    ChannelStats stats;
    MlpParams time_encoder;
    MlpParams symbol_encoder;
    MlpParams time_projector;
    MlpParams symbol_projector;

    static StcModel create(const ModelDims& dims, const ChannelStats& stats, std::uint64_t seed) {
        if (dims.channels == 0 || dims.length == 0 || dims.h_dim == 0 || dims.z_dim == 0) {
            throw UsageError("StcModel: dimensions must be positive");
        }
        if (dims.n_symbols < 3) throw UsageError("StcModel: n_symbols must be >= 3");
        if (stats.channels() != dims.channels) {
            throw DataError("StcModel: channel stats have " + std::to_string(stats.channels()) +
                            " channels, model expects " + std::to_string(dims.channels));
        }
        Rng rng(seed);
        StcModel m;
        m.dims = dims;
        m.stats = stats;
        m.time_encoder = make_mlp(dims.time_input_dim(), dims.encoder_hidden, dims.h_dim, rng);
        m.symbol_encoder = make_mlp(dims.symbol_input_dim(), dims.encoder_hidden, dims.h_dim, rng);
        m.time_projector = make_mlp(dims.h_dim, dims.projector_hidden, dims.z_dim, rng);
        m.symbol_projector = make_mlp(dims.h_dim, dims.projector_hidden, dims.z_dim, rng);
        m.validate();
        return m;
    }

    /// ReLU on hidden layers, identity on the output layer.
    static MlpParams make_mlp(std::size_t in, const std::vector<std::size_t>& hidden,
                              std::size_t out, Rng& rng) {
        std::vector<std::size_t> sizes{in};
        sizes.insert(sizes.end(), hidden.begin(), hidden.end());
        sizes.push_back(out);
        std::vector<Activation> acts(sizes.size() - 1, Activation::relu);
        acts.back() = Activation::identity;
        return MlpParams::init(sizes, acts, rng);
    }

    void validate() const {
        if (time_encoder.input_dim() != dims.time_input_dim() ||
            symbol_encoder.input_dim() != dims.symbol_input_dim()) {
            throw DataError("StcModel: encoder input dims do not match data dims");
        }
        if (time_encoder.output_dim() != dims.h_dim || symbol_encoder.output_dim() != dims.h_dim ||
            time_projector.input_dim() != dims.h_dim || symbol_projector.input_dim() != dims.h_dim) {
            throw DataError("StcModel: encoder/projector h_dim mismatch");
        }
        if (time_projector.output_dim() != dims.z_dim || symbol_projector.output_dim() != dims.z_dim) {
            throw DataError("StcModel: projectors must share z_dim");
        }
        if (stats.channels() != dims.channels) throw DataError("StcModel: channel stats mismatch");
    }

    [[nodiscard]] CutLines cutlines() const { return make_cutlines(stats, dims.n_symbols); }

    /// Parameters in declaration order (time encoder, symbol encoder, time
    /// projector, symbol projector), matching backward_embeddings.
    std::vector<ParamRef> parameters() {
        std::vector<ParamRef> out;
        append_params(out, "time_encoder", time_encoder);
        append_params(out, "symbol_encoder", symbol_encoder);
        append_params(out, "time_projector", time_projector);
        append_params(out, "symbol_projector", symbol_projector);
        return out;
    }

    friend bool operator==(const StcModel& a, const StcModel& b) {
        return a.dims == b.dims && a.stats.mean == b.stats.mean && a.stats.sigma == b.stats.sigma &&
               a.time_encoder == b.time_encoder && a.symbol_encoder == b.symbol_encoder &&
               a.time_projector == b.time_projector && a.symbol_projector == b.symbol_projector;
    }
};

/// Rejects data whose shape differs from what the model was built for.
inline void check_compatible(const StcModel& model, std::size_t channels, std::size_t length) {
    if (channels != model.dims.channels || length != model.dims.length) {
        throw DataError("dimension mismatch: model expects " + std::to_string(model.dims.channels) +
                        "x" + std::to_string(model.dims.length) + " windows, data has " +
                        std::to_string(channels) + "x" + std::to_string(length));
    }
}

/// Channel-standardized windows, flattened channel-major into one row each.
inline Matrix time_features(const ChannelStats& stats, std::span<const TimeSeriesSample> samples) {
    if (samples.empty()) throw UsageError("time_features: empty batch");
    const std::size_t k = samples.front().channels();
    const std::size_t l = samples.front().length();
    if (stats.channels() != k) throw DataError("time_features: channel stats mismatch");
    Matrix out(samples.size(), k * l);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (s.channels() != k || s.length() != l) throw DataError("time_features: ragged batch");
        auto row = out.row(i);
        for (std::size_t c = 0; c < k; ++c) {
            const auto src = s.values.row(c);
            for (std::size_t t = 0; t < l; ++t) row[c * l + t] = (src[t] - stats.mean[c]) / stats.sigma[c];
        }
    }
    return out;
}

/// Normalized symbol histograms, one row each.
inline Matrix symbol_features(std::span<const SymbolVector> vectors) {
    if (vectors.empty()) throw UsageError("symbol_features: empty batch");
    const std::size_t w = vectors.front().width();
    Matrix out(vectors.size(), w);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (vectors[i].normalized.size() != w) {
            throw DataError("symbol_features: histogram " + std::to_string(i) + " is not normalized");
        }
        std::copy(vectors[i].normalized.begin(), vectors[i].normalized.end(), out.row(i).begin());
    }
    return out;
}

/// Inputs for one training batch: original and augmented views in both domains.
struct ViewBatch {
    Matrix time;
    Matrix time_aug;
    Matrix symbol;
    Matrix symbol_aug;
};

/// The eight per-batch embeddings.
struct EmbeddingSet {
    Matrix h_time, h_time_aug, h_symbol, h_symbol_aug;
    Matrix z_time, z_time_aug, z_symbol, z_symbol_aug;

    [[nodiscard]] std::size_t batch() const { return h_time.rows(); }
};

struct ForwardPass {
    EmbeddingSet embeddings;
    // Original and augmented views are stacked so each network runs once.
    MlpActivations time_encoder, symbol_encoder, time_projector, symbol_projector;
};

inline ForwardPass forward_embeddings(const StcModel& model, const ViewBatch& batch) {
    const std::size_t n = batch.time.rows();
    if (n == 0) throw UsageError("forward_embeddings: empty batch");
    if (batch.time_aug.rows() != n || batch.symbol.rows() != n || batch.symbol_aug.rows() != n) {
        throw UsageError("forward_embeddings: views have different batch sizes");
    }
    if (batch.time.cols() != model.dims.time_input_dim() ||
        batch.time_aug.cols() != model.dims.time_input_dim() ||
        batch.symbol.cols() != model.dims.symbol_input_dim() ||
        batch.symbol_aug.cols() != model.dims.symbol_input_dim()) {
        throw DataError("forward_embeddings: batch width does not match model dims");
    }
    ForwardPass fp;
    fp.time_encoder = mlp_forward(model.time_encoder, vstack(batch.time, batch.time_aug));
    fp.symbol_encoder = mlp_forward(model.symbol_encoder, vstack(batch.symbol, batch.symbol_aug));
    fp.time_projector = mlp_forward(model.time_projector, fp.time_encoder.output);
    fp.symbol_projector = mlp_forward(model.symbol_projector, fp.symbol_encoder.output);

    auto& e = fp.embeddings;
    e.h_time = slice_rows(fp.time_encoder.output, 0, n);
    e.h_time_aug = slice_rows(fp.time_encoder.output, n, n);
    e.h_symbol = slice_rows(fp.symbol_encoder.output, 0, n);
    e.h_symbol_aug = slice_rows(fp.symbol_encoder.output, n, n);
    e.z_time = slice_rows(fp.time_projector.output, 0, n);
    e.z_time_aug = slice_rows(fp.time_projector.output, n, n);
    e.z_symbol = slice_rows(fp.symbol_projector.output, 0, n);
    e.z_symbol_aug = slice_rows(fp.symbol_projector.output, n, n);
    return fp;
}

/// Parameter gradients (in StcModel::parameters() order) given gradients of
/// the loss with respect to all eight embeddings.
inline std::vector<Matrix> backward_embeddings(const StcModel& model, const ForwardPass& fp,
                                               const EmbeddingSet& grads) {
    auto tp = mlp_backward(model.time_projector, fp.time_projector,
                           vstack(grads.z_time, grads.z_time_aug));
    auto sp = mlp_backward(model.symbol_projector, fp.symbol_projector,
                           vstack(grads.z_symbol, grads.z_symbol_aug));
    Matrix dh_time = vstack(grads.h_time, grads.h_time_aug);
    dh_time += tp.input;
    Matrix dh_symbol = vstack(grads.h_symbol, grads.h_symbol_aug);
    dh_symbol += sp.input;
    auto te = mlp_backward(model.time_encoder, fp.time_encoder, dh_time);
    auto se = mlp_backward(model.symbol_encoder, fp.symbol_encoder, dh_symbol);

    std::vector<Matrix> out;
    append_grads(out, std::move(te));
    append_grads(out, std::move(se));
    append_grads(out, std::move(tp));
    append_grads(out, std::move(sp));
    return out;
}

struct Embedding {
    Matrix h;
    Matrix z;
};

/// Inference path for the time view: z = P_T(E_T(x)).
inline Embedding embed_time(const StcModel& model, const Matrix& time_input) {
    if (time_input.rows() == 0) throw UsageError("embed_time: empty batch");
    if (time_input.cols() != model.dims.time_input_dim()) {
        throw DataError("embed_time: input width " + std::to_string(time_input.cols()) +
                        " does not match model (" + std::to_string(model.dims.time_input_dim()) + ")");
    }
    Embedding e;
    e.h = mlp_infer(model.time_encoder, time_input);
    e.z = mlp_infer(model.time_projector, e.h);
    return e;
}

inline Embedding embed_symbol(const StcModel& model, const Matrix& symbol_input) {
    if (symbol_input.rows() == 0) throw UsageError("embed_symbol: empty batch");
    if (symbol_input.cols() != model.dims.symbol_input_dim()) {
        throw DataError("embed_symbol: input width " + std::to_string(symbol_input.cols()) +
                        " does not match model (" + std::to_string(model.dims.symbol_input_dim()) + ")");
    }
    Embedding e;
    e.h = mlp_infer(model.symbol_encoder, symbol_input);
    e.z = mlp_infer(model.symbol_projector, e.h);
    return e;
}

}  // namespace stc
