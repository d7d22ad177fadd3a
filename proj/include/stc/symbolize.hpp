#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stc/error.hpp"
#include "stc/sample.hpp"

namespace stc {

/// Per-channel mean and population standard deviation of a fitting population.
struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> sigma;

    [[nodiscard]] std::size_t channels() const { return mean.size(); }
};

/// Mean and population sigma per channel over every time step of every sample.
inline ChannelStats fit_channel_stats(std::span<const TimeSeriesSample> dataset) {
    if (dataset.empty()) throw DataError("fit_channel_stats: empty dataset");
    const std::size_t k = dataset.front().channels();
    if (k == 0) throw DataError("fit_channel_stats: samples have no channels");

    std::vector<double> sum(k, 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& s = dataset[i];
        if (s.channels() != k) {
            throw DataError("fit_channel_stats: sample " + std::to_string(i) + " has " +
                            std::to_string(s.channels()) + " channels, expected " +
                            std::to_string(k));
        }
        for (std::size_t c = 0; c < k; ++c) {
            for (double v : s.values.row(c)) {
                if (!std::isfinite(v)) {
                    throw DataError("fit_channel_stats: non-finite value in sample " +
                                    std::to_string(i) + ", channel " + std::to_string(c));
                }
                sum[c] += v;
            }
        }
        count += s.length();
    }
    if (count == 0) throw DataError("fit_channel_stats: samples have no time steps");

    ChannelStats stats;
    stats.mean.resize(k);
    stats.sigma.resize(k);
    for (std::size_t c = 0; c < k; ++c) stats.mean[c] = sum[c] / static_cast<double>(count);

    // Second pass on centered values keeps the variance exact for constant input.
    std::vector<double> sq(k, 0.0);
    for (const auto& s : dataset) {
        for (std::size_t c = 0; c < k; ++c) {
            for (double v : s.values.row(c)) {
                const double d = v - stats.mean[c];
                sq[c] += d * d;
            }
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        stats.sigma[c] = std::sqrt(sq[c] / static_cast<double>(count));
    }
    return stats;
}

/// Symbol boundaries per channel. With n symbols there are n - 1 boundaries:
/// n - 2 equal-width bins inside mean +/- 3 sigma plus one open region on each side.
struct CutLines {
    std::size_t n_symbols = 0;
    std::vector<std::vector<double>> boundaries;

    [[nodiscard]] std::size_t channels() const { return boundaries.size(); }
};

inline CutLines make_cutlines(const ChannelStats& stats, std::size_t n_symbols) {
    if (n_symbols < 3) {
        throw UsageError("make_cutlines: n_symbols must be >= 3, got " + std::to_string(n_symbols));
    }
    CutLines cuts;
    cuts.n_symbols = n_symbols;
    cuts.boundaries.resize(stats.channels());
    const double interior = static_cast<double>(n_symbols - 2);
    for (std::size_t c = 0; c < stats.channels(); ++c) {
        const double mu = stats.mean[c];
        const double sd = stats.sigma[c];
        if (!std::isfinite(mu) || !std::isfinite(sd)) {
            throw DataError("make_cutlines: non-finite statistics for channel " + std::to_string(c));
        }
        if (sd <= 0.0) {
            throw DataError("make_cutlines: channel " + std::to_string(c) +
                            " has zero variance; drop or jitter it");
        }
        auto& b = cuts.boundaries[c];
        b.resize(n_symbols - 1);
        for (std::size_t j = 0; j + 1 < n_symbols; ++j) {
            b[j] = mu + (-3.0 * sd + (6.0 * sd / interior) * static_cast<double>(j));
        }
    }
    return cuts;
}

/// Discretized series, channels x length, each entry in [0, n_symbols).
class SymbolSeries {
public:
    SymbolSeries(std::size_t channels, std::size_t length, std::size_t n_symbols)
        : channels_(channels), length_(length), n_symbols_(n_symbols),
          symbols_(channels * length, 0) {
        if (channels == 0 || length == 0) {
            throw DataError("SymbolSeries: channels and length must be positive");
        }
    }

    /// From explicit per-channel symbol rows; validates the range.
    static SymbolSeries from_rows(const std::vector<std::vector<int>>& rows, std::size_t n_symbols) {
        if (rows.empty()) throw DataError("SymbolSeries: no channels");
        SymbolSeries s(rows.size(), rows.front().size(), n_symbols);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (rows[k].size() != s.length_) throw DataError("SymbolSeries: ragged rows");
            for (std::size_t t = 0; t < s.length_; ++t) s.set(k, t, rows[k][t]);
        }
        return s;
    }

    [[nodiscard]] std::size_t channels() const { return channels_; }
    [[nodiscard]] std::size_t length() const { return length_; }
    [[nodiscard]] std::size_t n_symbols() const { return n_symbols_; }

    [[nodiscard]] int at(std::size_t k, std::size_t t) const { return symbols_[k * length_ + t]; }

    void set(std::size_t k, std::size_t t, int symbol) {
        if (symbol < 0 || static_cast<std::size_t>(symbol) >= n_symbols_) {
            throw DataError("SymbolSeries: symbol " + std::to_string(symbol) + " out of range");
        }
        symbols_[k * length_ + t] = symbol;
    }

private:
    std::size_t channels_;
    std::size_t length_;
    std::size_t n_symbols_;
    std::vector<int> symbols_;
};

/// Symbol index = number of boundaries strictly below x, so a value equal to
/// a boundary falls in the lower region.
inline int symbol_of(double x, std::span<const double> boundaries) {
    return static_cast<int>(std::lower_bound(boundaries.begin(), boundaries.end(), x) -
                            boundaries.begin());
}

inline SymbolSeries discretize(const TimeSeriesSample& sample, const CutLines& cuts) {
    if (sample.channels() != cuts.channels()) {
        throw DataError("discretize: sample has " + std::to_string(sample.channels()) +
                        " channels, cutlines have " + std::to_string(cuts.channels()));
    }
    SymbolSeries out(sample.channels(), sample.length(), cuts.n_symbols);
    for (std::size_t k = 0; k < sample.channels(); ++k) {
        const auto row = sample.values.row(k);
        for (std::size_t t = 0; t < row.size(); ++t) {
            if (!std::isfinite(row[t])) {
                throw DataError("discretize: non-finite value at channel " + std::to_string(k) +
                                ", step " + std::to_string(t));
            }
            out.set(k, t, symbol_of(row[t], cuts.boundaries[k]));
        }
    }
    return out;
}

/// Bag-of-symbols histogram. counts is channels x n_symbols row-major; the
/// normalized form is the z-scored flattening of counts (empty until filled).
struct SymbolVector {
    std::size_t channels = 0;
    std::size_t n_symbols = 0;
    std::vector<std::int64_t> counts;
    std::vector<double> normalized;

    [[nodiscard]] std::int64_t count(std::size_t k, std::size_t j) const {
        return counts[k * n_symbols + j];
    }
    [[nodiscard]] std::int64_t channel_total(std::size_t k) const {
        std::int64_t s = 0;
        for (std::size_t j = 0; j < n_symbols; ++j) s += count(k, j);
        return s;
    }
    [[nodiscard]] std::size_t width() const { return channels * n_symbols; }
};

inline SymbolVector count_symbols(const SymbolSeries& series) {
    SymbolVector vec;
    vec.channels = series.channels();
    vec.n_symbols = series.n_symbols();
    vec.counts.assign(vec.width(), 0);
    for (std::size_t k = 0; k < series.channels(); ++k) {
        for (std::size_t t = 0; t < series.length(); ++t) {
            ++vec.counts[k * vec.n_symbols + static_cast<std::size_t>(series.at(k, t))];
        }
    }
    return vec;
}

/// z-score over the flattened count vector of one sample; all-equal counts give zeros.
inline SymbolVector normalize_histogram(SymbolVector vec) {
    const std::size_t n = vec.counts.size();
    vec.normalized.assign(n, 0.0);
    if (n == 0) return vec;
    const bool all_equal = std::all_of(vec.counts.begin(), vec.counts.end(),
                                       [&](std::int64_t c) { return c == vec.counts.front(); });
    if (all_equal) return vec;

    double sum = 0.0;
    for (auto c : vec.counts) sum += static_cast<double>(c);
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (auto c : vec.counts) {
        const double d = static_cast<double>(c) - mean;
        sq += d * d;
    }
    const double sd = std::sqrt(sq / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        vec.normalized[i] = (static_cast<double>(vec.counts[i]) - mean) / sd;
    }
    return vec;
}

inline SymbolVector symbolize(const TimeSeriesSample& sample, const CutLines& cuts) {
    return normalize_histogram(count_symbols(discretize(sample, cuts)));
}

}  // namespace stc
