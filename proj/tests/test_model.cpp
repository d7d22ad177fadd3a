#include <gtest/gtest.h>

#include "oracle.hpp"
#include "stc/losses.hpp"
#include "stc/model.hpp"

using namespace stc;

namespace {

ModelDims small_dims() {
    ModelDims d;
    d.channels = 2;
    d.length = 6;
    d.n_symbols = 4;
    d.h_dim = 5;
    d.z_dim = 3;
    d.encoder_hidden = {7};
    d.projector_hidden = {4};
    return d;
}

ChannelStats unit_stats(std::size_t k) {
    return {std::vector<double>(k, 0.0), std::vector<double>(k, 1.0)};
}

ViewBatch random_batch(const ModelDims& d, std::size_t n, Rng& rng) {
    return {oracle::random_matrix(n, d.time_input_dim(), rng), oracle::random_matrix(n, d.time_input_dim(), rng),
            oracle::random_matrix(n, d.symbol_input_dim(), rng), oracle::random_matrix(n, d.symbol_input_dim(), rng)};
}

}  // namespace

TEST(StcModel, CreateIsSeedDeterministic) {
    const auto d = small_dims();
    EXPECT_EQ(StcModel::create(d, unit_stats(2), 3), StcModel::create(d, unit_stats(2), 3));
    EXPECT_FALSE(StcModel::create(d, unit_stats(2), 3) == StcModel::create(d, unit_stats(2), 4));
}

TEST(StcModel, ZeroWeightsGiveBias) {
    const auto d = small_dims();
    auto m = StcModel::create(d, unit_stats(2), 1);
    for (auto& p : m.parameters()) p.value->fill(0.0);
    for (std::size_t j = 0; j < d.h_dim; ++j) m.time_encoder.layers.back().bias(0, j) = 0.5 + j;
    Rng rng(2);
    const auto e = embed_time(m, oracle::random_matrix(3, d.time_input_dim(), rng));
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < d.h_dim; ++j) EXPECT_EQ(e.h(i, j), 0.5 + j);
        for (std::size_t j = 0; j < d.z_dim; ++j) EXPECT_EQ(e.z(i, j), 0.0);
    }
}

TEST(StcModel, IdenticalViewsGiveIdenticalEmbeddings) {
    const auto d = small_dims();
    const auto m = StcModel::create(d, unit_stats(2), 1);
    Rng rng(3);
    auto b = random_batch(d, 4, rng);
    b.time_aug = b.time;
    b.symbol_aug = b.symbol;
    const auto e = forward_embeddings(m, b).embeddings;
    EXPECT_EQ(e.h_time, e.h_time_aug);
    EXPECT_EQ(e.z_symbol, e.z_symbol_aug);
}

TEST(StcModel, ForwardShapes) {
    const auto d = small_dims();
    const auto m = StcModel::create(d, unit_stats(2), 1);
    Rng rng(4);
    const auto e = forward_embeddings(m, random_batch(d, 8, rng)).embeddings;
    for (const Matrix* h : {&e.h_time, &e.h_time_aug, &e.h_symbol, &e.h_symbol_aug}) {
        EXPECT_EQ(h->rows(), 8u);
        EXPECT_EQ(h->cols(), d.h_dim);
        EXPECT_TRUE(h->all_finite());
    }
    for (const Matrix* z : {&e.z_time, &e.z_time_aug, &e.z_symbol, &e.z_symbol_aug}) {
        EXPECT_EQ(z->rows(), 8u);
        EXPECT_EQ(z->cols(), d.z_dim);
        EXPECT_TRUE(z->all_finite());
    }
}

TEST(StcModel, InferenceMatchesTrainingForward) {
    const auto d = small_dims();
    const auto m = StcModel::create(d, unit_stats(2), 1);
    Rng rng(5);
    const auto b = random_batch(d, 6, rng);
    const auto e = forward_embeddings(m, b).embeddings;
    EXPECT_EQ(embed_time(m, b.time).z, e.z_time);
    EXPECT_EQ(embed_symbol(m, b.symbol_aug).z, e.z_symbol_aug);
}

TEST(StcModel, RowsAreIndependentOfBatch) {
    const auto d = small_dims();
    const auto m = StcModel::create(d, unit_stats(2), 1);
    Rng rng(6);
    const Matrix x = oracle::random_matrix(32, d.time_input_dim(), rng);
    const auto full = embed_time(m, x);
    for (std::size_t i : {0u, 13u, 31u}) {
        const auto one = embed_time(m, slice_rows(x, i, 1));
        for (std::size_t j = 0; j < d.z_dim; ++j) EXPECT_EQ(one.z(0, j), full.z(i, j));
    }
}

TEST(StcModel, RejectsEmptyAndMismatchedBatches) {
    const auto d = small_dims();
    const auto m = StcModel::create(d, unit_stats(2), 1);
    EXPECT_THROW(embed_time(m, Matrix(0, d.time_input_dim())), UsageError);
    EXPECT_THROW(embed_symbol(m, Matrix(0, d.symbol_input_dim())), UsageError);
    EXPECT_THROW(embed_time(m, Matrix(2, d.time_input_dim() + 1)), DataError);
    EXPECT_THROW(check_compatible(m, 3, d.length), DataError);
    EXPECT_THROW(StcModel::create(d, unit_stats(3), 1), DataError);
}

TEST(StcModel, ProjectorsMustShareZDim) {
    const auto d = small_dims();
    auto m = StcModel::create(d, unit_stats(2), 1);
    Rng rng(7);
    m.symbol_projector = StcModel::make_mlp(d.h_dim, d.projector_hidden, d.z_dim + 1, rng);
    EXPECT_THROW(m.validate(), DataError);
}

TEST(StcModel, TimeFeaturesStandardizeChannelMajor) {
    TimeSeriesSample s{Matrix{{1, 2, 3}, {10, 20, 30}}, 1, std::nullopt};
    const ChannelStats stats{{2, 20}, {1, 10}};
    const auto x = time_features(stats, std::span<const TimeSeriesSample>(&s, 1));
    EXPECT_EQ(x, (Matrix{{-1, 0, 1, -1, 0, 1}}));
}

TEST(StcModel, EndToEndGradientMatchesFiniteDifferences) {
    auto d = small_dims();
    auto m = StcModel::create(d, unit_stats(2), 11);
    for (auto& p : m.parameters()) {
        if (p.name.ends_with("bias")) {
            Rng rng(std::hash<std::string>{}(p.name));
            for (double& v : p.value->values()) v = 0.1 * rng.normal();
        }
    }
    Rng rng(12);
    const auto b = random_batch(d, 4, rng);
    const LossConfig cfg;
    const auto fp = forward_embeddings(m, b);
    EmbeddingSet g;
    total_loss(fp.embeddings, cfg, &g);
    const auto grads = backward_embeddings(m, fp, g);
    auto f = [&] { return oracle::total(forward_embeddings(m, b).embeddings, cfg).total; };
    auto params = m.parameters();
    ASSERT_EQ(params.size(), grads.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        EXPECT_LT(oracle::max_relative_error(grads[i], oracle::numeric_gradient(f, *params[i].value)), 1e-4)
            << params[i].name;
    }
}
