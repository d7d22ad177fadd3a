#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracle.hpp"
#include "stc/losses.hpp"

using namespace stc;

namespace {

LossConfig unit_tau(DenominatorMode mode = DenominatorMode::simclr_standard) {
    LossConfig c;
    c.tau = 1.0;
    c.mode = mode;
    return c;
}

std::vector<double> cosine(std::vector<double> a, std::vector<double> b) { return {cosine_sim(a, b)}; }

}  // namespace

TEST(CosineSim, Examples) {
    EXPECT_DOUBLE_EQ(cosine({0.3, -2, 5}, {0.3, -2, 5})[0], 1.0);
    EXPECT_EQ(cosine({1, 0}, {0, 1})[0], 0.0);
    EXPECT_NEAR(cosine({1, 2}, {3, -1})[0], 1.0 / (std::sqrt(5.0) * std::sqrt(10.0)), 1e-15);
    EXPECT_NEAR(cosine({1, 2}, {3, -1})[0], 0.14142, 1e-5);
}

TEST(CosineSim, SymmetricAndScaleInvariant) {
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> a(6), b(6);
        for (double& v : a) v = rng.normal();
        for (double& v : b) v = rng.normal();
        const double s = cosine_sim(a, b);
        EXPECT_DOUBLE_EQ(s, cosine_sim(b, a));
        std::vector<double> a2 = a;
        for (double& v : a2) v *= 7.5;
        EXPECT_NEAR(s, cosine_sim(a2, b), 1e-14);
        EXPECT_LE(std::abs(s), 1.0);
    }
}

TEST(CosineSim, ZeroVectorThrows) {
    const std::vector<double> z{0, 0}, a{1, 2};
    EXPECT_THROW(cosine_sim(z, a), NumericalError);
}

TEST(InfoNce, SingleNegativeClosedForm) {
    const Matrix e{{1, 0}, {0, 1}};
    const Matrix* pool[] = {&e};
    const auto l = info_nce(e, e, pool, unit_tau());
    EXPECT_NEAR(l[0], std::log(1.0 + std::exp(-1.0)), 1e-12);
    EXPECT_NEAR(l[0], 0.31326, 1e-5);
}

TEST(InfoNce, LiteralDenominatorClosedForm) {
    const Matrix e{{1, 0}, {0, 1}};
    const Matrix* pool[] = {&e};
    const auto l = info_nce(e, e, pool, unit_tau(DenominatorMode::negatives_only));
    EXPECT_NEAR(l[0], -1.0, 1e-12);
}

TEST(InfoNce, SymmetricCase) {
    for (std::size_t n : {2u, 5u, 9u}) {
        const Matrix same(n, 3, 1.0);
        const Matrix* pool[] = {&same, &same};
        const auto l = info_nce(same, same, pool, unit_tau());
        const double n_neg = 2.0 * static_cast<double>(n - 1);
        for (double v : l) EXPECT_NEAR(v, std::log(1.0 + n_neg), 1e-12);
    }
}

TEST(InfoNce, MatchesOracle) {
    Rng rng(2);
    for (auto mode : {DenominatorMode::simclr_standard, DenominatorMode::negatives_only}) {
        LossConfig cfg;
        cfg.mode = mode;
        const Matrix a = oracle::random_matrix(7, 4, rng);
        const Matrix p = oracle::random_matrix(7, 4, rng);
        const Matrix n2 = oracle::random_matrix(7, 4, rng);
        const Matrix* pool[] = {&a, &n2};
        const auto l = info_nce(a, p, pool, cfg);
        const auto o = oracle::info_nce(oracle::to_rows(a), oracle::to_rows(p),
                                        {oracle::to_rows(a), oracle::to_rows(n2)}, cfg.tau,
                                        mode == DenominatorMode::simclr_standard);
        for (std::size_t i = 0; i < l.size(); ++i) EXPECT_NEAR(l[i], o[i], 1e-9);
    }
}

TEST(InfoNce, SimclrLossIsNonNegative) {
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        const auto e = oracle::random_embeddings(6, 5, 3, rng);
        for (double v : time_loss(e, LossConfig{})) EXPECT_GE(v, 0.0);
        for (double v : cross_pair_loss(e.z_time, e.z_symbol, LossConfig{})) EXPECT_GE(v, 0.0);
    }
}

TEST(InfoNce, StableAtSmallTemperature) {
    Rng rng(4);
    LossConfig cfg;
    cfg.tau = 1e-3;
    const auto e = oracle::random_embeddings(5, 4, 3, rng);
    for (double v : time_loss(e, cfg)) EXPECT_TRUE(std::isfinite(v));
}

TEST(CrossPairLoss, OrthogonalIdenticalViews) {
    const Matrix z{{2, 0, 0}, {0, 0.5, 0}};
    const auto l = cross_pair_loss(z, z, unit_tau());
    for (double v : l) EXPECT_NEAR(v, std::log(1.0 + std::exp(-1.0)), 1e-12);
}

TEST(CrossPairLoss, BatchOfOneThrows) {
    EXPECT_THROW(cross_pair_loss(Matrix{{1, 0}}, Matrix{{0, 1}}, LossConfig{}), UsageError);
}

TEST(CrossPairLoss, PermutationEquivariant) {
    Rng rng(5);
    const Matrix a = oracle::random_matrix(6, 4, rng);
    const Matrix b = oracle::random_matrix(6, 4, rng);
    const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    Matrix pa(6, 4), pb(6, 4);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            pa(i, j) = a(perm[i], j);
            pb(i, j) = b(perm[i], j);
        }
    }
    const auto l = cross_pair_loss(a, b, LossConfig{});
    const auto pl = cross_pair_loss(pa, pb, LossConfig{});
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(pl[i], l[perm[i]], 1e-12);
}

TEST(ConsistencyLoss, EqualPairLossesGiveFourDelta) {
    Rng rng(6);
    auto e = oracle::random_embeddings(5, 4, 3, rng);
    e.z_time_aug = e.z_time;
    e.z_symbol_aug = e.z_symbol;
    LossConfig cfg;
    cfg.delta = 0.7;
    for (double v : consistency_loss(e, cfg)) EXPECT_NEAR(v, 4 * 0.7, 1e-12);
    cfg.delta = 0.0;
    for (double v : consistency_loss(e, cfg)) EXPECT_EQ(v, 0.0);
}

TEST(ConsistencyLoss, MatchesOracle) {
    Rng rng(7);
    const auto e = oracle::random_embeddings(4, 5, 3, rng);
    const LossConfig cfg;
    const auto l = consistency_loss(e, cfg);
    const auto o = oracle::total(e, cfg).consistency;
    for (std::size_t i = 0; i < l.size(); ++i) EXPECT_NEAR(l[i], o[i], 1e-9);
}

TEST(ConsistencyLoss, RisesWhenTimeSymbolPairSeparates) {
    // Pushing each z_symbol away from its z_time makes L_{zt,zs} larger while the
    // augmented pairs are unchanged.
    const Matrix zt{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const Matrix near{{1, 0.1, 0}, {0, 1, 0.1}, {0.1, 0, 1}};
    const Matrix far{{0.2, 1, 0}, {0, 0.2, 1}, {1, 0, 0.2}};
    EmbeddingSet a{zt, zt, zt, zt, zt, zt, near, zt};
    EmbeddingSet b = a;
    b.z_symbol = far;
    const LossConfig cfg;
    const auto la = consistency_loss(a, cfg);
    const auto lb = consistency_loss(b, cfg);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_GT(lb[i], la[i]);
}

TEST(TotalLoss, MatchesOracleAndBreakdown) {
    Rng rng(8);
    for (auto mode : {DenominatorMode::simclr_standard, DenominatorMode::negatives_only}) {
        LossConfig cfg;
        cfg.lambda = 1.0;
        cfg.mode = mode;
        const auto e = oracle::random_embeddings(2, 4, 3, rng);
        const auto b = total_loss(e, cfg);
        const auto o = oracle::total(e, cfg);
        EXPECT_NEAR(b.total, o.total, 1e-9);
        EXPECT_DOUBLE_EQ(b.total, b.time_mean + b.symbol_mean + cfg.lambda * b.consistency_mean);
        EXPECT_DOUBLE_EQ(b.time_mean, mean_of(b.time));
        EXPECT_EQ(b.time, time_loss(e, cfg));
        EXPECT_EQ(b.symbol, symbol_loss(e, cfg));
    }
}

TEST(TotalLoss, ZeroLambda) {
    Rng rng(9);
    LossConfig cfg;
    cfg.lambda = 0.0;
    const auto e = oracle::random_embeddings(5, 4, 3, rng);
    const auto b = total_loss(e, cfg);
    EXPECT_EQ(b.total, b.time_mean + b.symbol_mean);
    EmbeddingSet g;
    total_loss(e, cfg, &g);
    for (double v : g.z_time.values()) EXPECT_EQ(v, 0.0);
}

TEST(TotalLoss, RejectsBatchOfOne) {
    Rng rng(10);
    EXPECT_THROW(total_loss(oracle::random_embeddings(1, 4, 3, rng), LossConfig{}), UsageError);
}

TEST(TotalLoss, GradientMatchesFiniteDifferences) {
    Rng rng(11);
    for (auto mode : {DenominatorMode::simclr_standard, DenominatorMode::negatives_only}) {
        LossConfig cfg;
        cfg.mode = mode;
        auto e = oracle::random_embeddings(4, 5, 3, rng);
        EmbeddingSet g;
        total_loss(e, cfg, &g);
        auto f = [&] { return oracle::total(e, cfg).total; };
        Matrix* params[] = {&e.h_time, &e.h_time_aug, &e.h_symbol, &e.h_symbol_aug,
                            &e.z_time, &e.z_time_aug, &e.z_symbol, &e.z_symbol_aug};
        const Matrix* grads[] = {&g.h_time, &g.h_time_aug, &g.h_symbol, &g.h_symbol_aug,
                                 &g.z_time, &g.z_time_aug, &g.z_symbol, &g.z_symbol_aug};
        for (std::size_t i = 0; i < 8; ++i) {
            EXPECT_LT(oracle::max_relative_error(*grads[i], oracle::numeric_gradient(f, *params[i])), 1e-4) << i;
        }
    }
}

TEST(TotalLoss, InvariantToEmbeddingNorms) {
    Rng rng(12);
    const auto e = oracle::random_embeddings(5, 4, 3, rng);
    auto scaled = e;
    for (Matrix* m : {&scaled.h_time, &scaled.z_symbol_aug}) {
        for (std::size_t i = 0; i < m->rows(); ++i) {
            const double s = 0.1 + 3.0 * static_cast<double>(i);
            for (double& v : m->row(i)) v *= s;
        }
    }
    EXPECT_NEAR(total_loss(e, LossConfig{}).total, total_loss(scaled, LossConfig{}).total, 1e-12);
}

TEST(LossConfig, Validation) {
    LossConfig cfg;
    cfg.tau = 0.0;
    EXPECT_THROW(cfg.validate(), UsageError);
    EXPECT_EQ(denominator_mode_from_string("negatives_only"), DenominatorMode::negatives_only);
    EXPECT_THROW(denominator_mode_from_string("bogus"), UsageError);
}
