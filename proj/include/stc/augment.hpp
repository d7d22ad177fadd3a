#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "stc/error.hpp"
#include "stc/random.hpp"
#include "stc/sample.hpp"
#include "stc/symbolize.hpp"

namespace stc {

struct AugmentConfig {
    double jitter_sigma = 0.1;       // noise std as a fraction of channel sigma
    double symbol_edit_rate = 0.02;  // edits as a fraction of total count mass
    std::uint64_t seed = 0;

    void validate() const {
        if (!(jitter_sigma >= 0.0) || !std::isfinite(jitter_sigma)) {
            throw UsageError("augment.jitter_sigma must be >= 0");
        }
        if (!(symbol_edit_rate >= 0.0 && symbol_edit_rate <= 1.0)) {
            throw UsageError("augment.symbol_edit_rate must be in [0, 1]");
        }
    }
};

/// Adds independent Gaussian noise with std jitter_sigma * sigma[channel].
inline TimeSeriesSample jitter(const TimeSeriesSample& sample, const ChannelStats& stats,
                               const AugmentConfig& cfg, Rng& rng) {
    cfg.validate();
    if (stats.channels() != sample.channels()) {
        throw DataError("jitter: channel stats do not match sample");
    }
    TimeSeriesSample out = sample;
    if (cfg.jitter_sigma == 0.0) return out;
    for (std::size_t k = 0; k < out.channels(); ++k) {
        const double sd = cfg.jitter_sigma * stats.sigma[k];
        for (double& v : out.values.row(k)) v += sd * rng.normal();
    }
    return out;
}

struct SymbolEdit {
    enum class Kind { insertion, deletion };
    Kind kind;
    std::size_t channel;
    std::size_t symbol;
};

/// Applies one edit to the raw counts. A deletion of an empty cell is rejected.
inline void apply_symbol_edit(SymbolVector& vec, const SymbolEdit& edit) {
    if (edit.channel >= vec.channels || edit.symbol >= vec.n_symbols) {
        throw UsageError("apply_symbol_edit: cell out of range");
    }
    auto& cell = vec.counts[edit.channel * vec.n_symbols + edit.symbol];
    if (edit.kind == SymbolEdit::Kind::insertion) {
        ++cell;
    } else {
        if (cell == 0) throw UsageError("apply_symbol_edit: deleting from an empty cell");
        --cell;
    }
}

/// Draws one insertion-or-deletion edit. Deletion targets a uniformly chosen
/// nonzero cell; with no nonzero cell it degrades to an insertion.
inline SymbolEdit draw_symbol_edit(const SymbolVector& vec, Rng& rng) {
    const bool insert = rng.coin();
    if (!insert) {
        std::size_t nonzero = 0;
        for (auto c : vec.counts) nonzero += c > 0 ? 1 : 0;
        if (nonzero > 0) {
            std::size_t pick = rng.below(nonzero);
            for (std::size_t i = 0; i < vec.counts.size(); ++i) {
                if (vec.counts[i] == 0) continue;
                if (pick-- == 0) {
                    return {SymbolEdit::Kind::deletion, i / vec.n_symbols, i % vec.n_symbols};
                }
            }
        }
    }
    const std::size_t cell = rng.below(vec.counts.size());
    return {SymbolEdit::Kind::insertion, cell / vec.n_symbols, cell % vec.n_symbols};
}

/// Number of edits for a histogram: round(rate * K * L), with L the count
/// mass of channel 0.
inline std::size_t symbol_edit_count(const SymbolVector& vec, double rate) {
    if (vec.channels == 0) return 0;
    const double mass =
        static_cast<double>(vec.channels) * static_cast<double>(vec.channel_total(0));
    return static_cast<std::size_t>(std::llround(rate * mass));
}

/// Random insertions/deletions on the raw counts, then re-normalization.
inline SymbolVector perturb_symbols(const SymbolVector& vec, const AugmentConfig& cfg, Rng& rng) {
    cfg.validate();
    if (vec.counts.size() != vec.width() || vec.counts.empty()) {
        throw UsageError("perturb_symbols: raw counts missing");
    }
    SymbolVector out = vec;
    const std::size_t edits = symbol_edit_count(vec, cfg.symbol_edit_rate);
    for (std::size_t e = 0; e < edits; ++e) apply_symbol_edit(out, draw_symbol_edit(out, rng));
    return normalize_histogram(std::move(out));
}

}  // namespace stc
