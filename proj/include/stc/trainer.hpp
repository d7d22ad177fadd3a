#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "stc/augment.hpp"
#include "stc/error.hpp"
#include "stc/losses.hpp"
#include "stc/model.hpp"
#include "stc/nn.hpp"
#include "stc/random.hpp"
#include "stc/symbolize.hpp"

namespace stc {

struct SchedulerConfig {
    double factor = 0.5;
    std::size_t patience = 10;
    double min_lr = 1e-6;
};

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    double lr = 5e-4;
    std::uint64_t seed = 0;
    std::size_t n_symbols = 64;
    std::size_t h_dim = 128;
    std::size_t z_dim = 32;
    std::vector<std::size_t> encoder_hidden{256};
    std::vector<std::size_t> projector_hidden{64};
    LossConfig loss;
    AugmentConfig augment;
    SchedulerConfig scheduler;

    void validate() const {
        if (batch_size < 2) throw UsageError("train.batch_size must be >= 2");
        if (!(lr > 0.0)) throw UsageError("train.lr must be > 0");
        if (n_symbols < 3) throw UsageError("symbolize.n_symbols must be >= 3");
        if (!(scheduler.factor > 0.0 && scheduler.factor < 1.0)) {
            throw UsageError("scheduler.factor must be in (0, 1)");
        }
        loss.validate();
        augment.validate();
    }

    [[nodiscard]] ModelDims dims_for(std::size_t channels, std::size_t length) const {
        return ModelDims{channels, length, n_symbols, h_dim, z_dim, encoder_hidden, projector_hidden};
    }
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double time_loss = 0.0;
    double symbol_loss = 0.0;
    double consistency_loss = 0.0;
    double total = 0.0;
    double lr = 0.0;  // learning rate used during this epoch
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    double seconds = 0.0;
};

struct PretrainResult {
    StcModel model;
    TrainReport report;
};

/// Preprocessed pretraining set: standardized windows and raw symbol counts.
/// Symbol counting does not depend on augmentation, so it is done once.
struct PretrainData {
    std::vector<TimeSeriesSample> raw;
    Matrix time;                        // N x K*L, standardized
    std::vector<SymbolVector> symbols;  // normalized histograms with raw counts
};

inline PretrainData prepare_pretrain_data(std::span<const TimeSeriesSample> samples, const StcModel& model) {
    PretrainData d;
    d.raw.assign(samples.begin(), samples.end());
    for (const auto& s : d.raw) check_compatible(model, s.channels(), s.length());
    d.time = time_features(model.stats, samples);
    const CutLines cuts = model.cutlines();
    d.symbols.reserve(samples.size());
    for (const auto& s : samples) d.symbols.push_back(symbolize(s, cuts));
    return d;
}

/// Assembles the four input views for the given sample indices.
inline ViewBatch make_view_batch(const PretrainData& data, const StcModel& model, std::span<const std::size_t> idx,
                                 const AugmentConfig& aug, Rng& rng) {
    const std::size_t n = idx.size();
    ViewBatch b{Matrix(n, data.time.cols()), Matrix(n, data.time.cols()),
                Matrix(n, model.dims.symbol_input_dim()), Matrix(n, model.dims.symbol_input_dim())};
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t i = idx[r];
        std::copy(data.time.row(i).begin(), data.time.row(i).end(), b.time.row(r).begin());
        const TimeSeriesSample noisy = jitter(data.raw[i], model.stats, aug, rng);
        const Matrix noisy_row = time_features(model.stats, std::span<const TimeSeriesSample>(&noisy, 1));
        std::copy(noisy_row.row(0).begin(), noisy_row.row(0).end(), b.time_aug.row(r).begin());
        const auto& sv = data.symbols[i];
        std::copy(sv.normalized.begin(), sv.normalized.end(), b.symbol.row(r).begin());
        const SymbolVector edited = perturb_symbols(sv, aug, rng);
        std::copy(edited.normalized.begin(), edited.normalized.end(), b.symbol_aug.row(r).begin());
    }
    return b;
}

/// One optimization step on a batch; returns the loss breakdown before the update.
inline LossBreakdown train_step(StcModel& model, AdamState& adam, const ViewBatch& batch, const LossConfig& loss) {
    const ForwardPass fp = forward_embeddings(model, batch);
    EmbeddingSet grads;
    LossBreakdown lb = total_loss(fp.embeddings, loss, &grads);
    if (!std::isfinite(lb.total)) return lb;
    const std::vector<Matrix> g = backward_embeddings(model, fp, grads);
    const auto params = model.parameters();
    adam_step(adam, params, g);
    return lb;
}

/// Self-supervised pretraining. Channel statistics and cutlines are fitted on
/// `samples` (the pretraining set) and stored in the returned model.
inline PretrainResult pretrain(std::span<const TimeSeriesSample> samples, const TrainConfig& cfg,
                               const std::function<void(const EpochRecord&)>& on_epoch = {}) {
    cfg.validate();
    if (samples.size() < 2) throw DataError("pretrain: need at least 2 pretraining windows");
    const auto start = std::chrono::steady_clock::now();

    const ChannelStats stats = fit_channel_stats(samples);
    const ModelDims dims = cfg.dims_for(samples.front().channels(), samples.front().length());
    PretrainResult result{StcModel::create(dims, stats, cfg.seed), {}};
    StcModel& model = result.model;
    const PretrainData data = prepare_pretrain_data(samples, model);

    const Rng root(cfg.seed);
    Rng shuffle_rng = root.split(1);
    Rng augment_rng = Rng(cfg.augment.seed).split(2);
    AdamState adam;
    adam.config.lr = cfg.lr;
    PlateauScheduler sched{cfg.scheduler.factor, cfg.scheduler.patience, cfg.scheduler.min_lr};

    // Undersized trailing batches are dropped so every step sees the same negative pool size.
    const std::size_t batch = std::min(cfg.batch_size, samples.size());
    const std::size_t batches = samples.size() / batch;
    std::vector<std::size_t> order(samples.size());

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = adam.config.lr;
        for (std::size_t b = 0; b < batches; ++b) {
            const std::span<const std::size_t> idx(order.data() + b * batch, batch);
            const ViewBatch vb = make_view_batch(data, model, idx, cfg.augment, augment_rng);
            const LossBreakdown lb = train_step(model, adam, vb, cfg.loss);
            if (!std::isfinite(lb.total)) {
                throw NumericalError("pretrain: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                     std::to_string(b + 1));
            }
            rec.time_loss += lb.time_mean;
            rec.symbol_loss += lb.symbol_mean;
            rec.consistency_loss += lb.consistency_mean;
            rec.total += lb.total;
        }
        const double inv = 1.0 / static_cast<double>(batches);
        rec.time_loss *= inv;
        rec.symbol_loss *= inv;
        rec.consistency_loss *= inv;
        rec.total *= inv;
        adam.config.lr = sched.step(adam.config.lr, rec.total);
        result.report.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }
    result.report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

/// Training log as CSV: epoch,L_T,L_S,L_TS,total,lr.
inline void write_training_log(std::ostream& out, const TrainReport& report,
                               const std::vector<std::pair<std::string, std::string>>& metadata = {}) {
    for (const auto& [k, v] : metadata) out << "# " << k << "=" << v << "\n";
    out << "epoch,L_T,L_S,L_TS,total,lr\n";
    char buf[256];
    for (const auto& e : report.epochs) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.time_loss, e.symbol_loss,
                      e.consistency_loss, e.total, e.lr);
        out << buf;
    }
}

}  // namespace stc
