#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "stc/augment.hpp"

using namespace stc;

TEST(Jitter, ZeroSigmaIsIdentity) {
    Rng rng(1);
    const auto s = oracle::random_sample(2, 50, rng);
    AugmentConfig cfg;
    cfg.jitter_sigma = 0.0;
    Rng aug(9);
    const auto out = jitter(s, ChannelStats{{0, 0}, {1, 2}}, cfg, aug);
    EXPECT_EQ(out.values, s.values);
}

TEST(Jitter, DeterministicUnderSeed) {
    Rng rng(1);
    const auto s = oracle::random_sample(2, 50, rng);
    const ChannelStats stats{{0, 0}, {1, 2}};
    AugmentConfig cfg;
    Rng a(42), b(42);
    EXPECT_EQ(jitter(s, stats, cfg, a).values, jitter(s, stats, cfg, b).values);
}

TEST(Jitter, PreservesShapeSubjectAndLabel) {
    Rng rng(3);
    TimeSeriesSample s = oracle::random_sample(3, 20, rng, 7);
    s.label = 2;
    AugmentConfig cfg;
    const auto out = jitter(s, ChannelStats{{0, 0, 0}, {1, 1, 1}}, cfg, rng);
    EXPECT_EQ(out.values.rows(), 3u);
    EXPECT_EQ(out.values.cols(), 20u);
    EXPECT_EQ(out.subject_id, 7);
    EXPECT_EQ(out.label, 2);
}

TEST(Jitter, EmpiricalNoiseStd) {
    TimeSeriesSample s{Matrix(1, 10000, 5.0), 1, std::nullopt};
    const double sigma = 3.0;
    AugmentConfig cfg;
    cfg.jitter_sigma = 0.1;
    Rng rng(11);
    const auto out = jitter(s, ChannelStats{{5.0}, {sigma}}, cfg, rng);
    double mean = 0, sq = 0;
    for (double v : out.values.values()) mean += (v - 5.0) / 10000.0;
    for (double v : out.values.values()) sq += (v - 5.0 - mean) * (v - 5.0 - mean) / 10000.0;
    EXPECT_NEAR(std::sqrt(sq), 0.1 * sigma, 0.05 * 0.1 * sigma);
}

TEST(PerturbSymbols, ZeroRateEqualsRenormalizedInput) {
    SymbolVector v{1, 4, {1, 0, 2, 1}, {}};
    AugmentConfig cfg;
    cfg.symbol_edit_rate = 0.0;
    Rng rng(1);
    const auto out = perturb_symbols(v, cfg, rng);
    EXPECT_EQ(out.counts, v.counts);
    EXPECT_EQ(out.normalized, normalize_histogram(v).normalized);
}

TEST(PerturbSymbols, EditCountRounding) {
    SymbolVector v{1, 4, {1, 0, 2, 1}, {}};
    EXPECT_EQ(symbol_edit_count(v, 0.25), 1u);  // 0.25 * 1 * 4
    EXPECT_EQ(symbol_edit_count(v, 0.0), 0u);
    EXPECT_EQ(symbol_edit_count(v, 1.0), 4u);
}

TEST(PerturbSymbols, ForcedSingleInsertion) {
    SymbolVector v{1, 4, {1, 0, 2, 1}, {}};
    apply_symbol_edit(v, {SymbolEdit::Kind::insertion, 0, 2});
    EXPECT_EQ(v.counts, (std::vector<std::int64_t>{1, 0, 3, 1}));
    apply_symbol_edit(v, {SymbolEdit::Kind::deletion, 0, 0});
    EXPECT_EQ(v.counts, (std::vector<std::int64_t>{0, 0, 3, 1}));
    EXPECT_THROW(apply_symbol_edit(v, {SymbolEdit::Kind::deletion, 0, 0}), UsageError);
}

TEST(PerturbSymbols, DeletionOnEmptyHistogramDegradesToInsertion) {
    SymbolVector v{2, 3, std::vector<std::int64_t>(6, 0), {}};
    Rng rng(5);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(draw_symbol_edit(v, rng).kind, SymbolEdit::Kind::insertion);
}

TEST(PerturbSymbols, CountsStayNonNegativeAndMassWithinM) {
    // Brute force over 1000 random edit sequences.
    Rng rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        SymbolVector v{2, 6, {}, {}};
        const std::size_t length = 1 + rng.below(12);
        for (std::size_t k = 0; k < 2; ++k) {
            std::vector<std::int64_t> row(6, 0);
            for (std::size_t t = 0; t < length; ++t) ++row[rng.below(6)];
            v.counts.insert(v.counts.end(), row.begin(), row.end());
        }
        AugmentConfig cfg;
        cfg.symbol_edit_rate = rng.uniform();
        const auto m = static_cast<std::int64_t>(symbol_edit_count(v, cfg.symbol_edit_rate));
        const auto out = perturb_symbols(v, cfg, rng);
        std::int64_t before = 0, after = 0;
        for (auto c : v.counts) before += c;
        for (auto c : out.counts) {
            EXPECT_GE(c, 0);
            after += c;
        }
        EXPECT_LE(std::abs(after - before), m);
        EXPECT_EQ(out.normalized, normalize_histogram(out).normalized);
    }
}

TEST(PerturbSymbols, DeterministicUnderSeed) {
    SymbolVector v{1, 8, {3, 0, 5, 1, 0, 0, 2, 1}, {}};
    AugmentConfig cfg;
    cfg.symbol_edit_rate = 0.5;
    Rng a(3), b(3);
    const auto x = perturb_symbols(v, cfg, a);
    const auto y = perturb_symbols(v, cfg, b);
    EXPECT_EQ(x.counts, y.counts);
    EXPECT_EQ(x.normalized, y.normalized);
}

TEST(AugmentConfig, RejectsOutOfRange) {
    AugmentConfig cfg;
    cfg.symbol_edit_rate = 1.5;
    EXPECT_THROW(cfg.validate(), UsageError);
    cfg.symbol_edit_rate = 0.1;
    cfg.jitter_sigma = -1;
    EXPECT_THROW(cfg.validate(), UsageError);
}
