#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "stc/error.hpp"
#include "stc/matrix.hpp"
#include "stc/model.hpp"

namespace stc {

enum class DenominatorMode {
    negatives_only,   // negatives only: sum over j != i
    simclr_standard,  // negatives plus the positive pair
};

inline const char* to_string(DenominatorMode m) {
    return m == DenominatorMode::negatives_only ? "negatives_only" : "simclr_standard";
}

inline DenominatorMode denominator_mode_from_string(const std::string& s) {
    if (s == "negatives_only") return DenominatorMode::negatives_only;
    if (s == "simclr_standard") return DenominatorMode::simclr_standard;
    throw UsageError("unknown loss.denominator_mode '" + s + "'");
}

struct LossConfig {
    double tau = 0.2;
    double delta = 1.0;
    double lambda = 0.5;
    DenominatorMode mode = DenominatorMode::simclr_standard;

    void validate() const {
        if (!(tau > 0.0) || !std::isfinite(tau)) throw UsageError("loss.tau must be > 0");
        if (!(delta >= 0.0)) throw UsageError("loss.delta must be >= 0");
        if (!(lambda >= 0.0)) throw UsageError("loss.lambda must be >= 0");
    }
};

inline double cosine_sim(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw UsageError("cosine_sim: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw NumericalError("cosine_sim: zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

namespace detail {

struct UnitRows {
    Matrix unit;
    std::vector<double> norm;
};

inline UnitRows unit_rows(const Matrix& m) {
    UnitRows u{m, std::vector<double>(m.rows())};
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = u.unit.row(i);
        double sq = 0.0;
        for (double v : r) sq += v * v;
        if (sq == 0.0) throw NumericalError("contrastive loss: zero embedding in row " + std::to_string(i));
        u.norm[i] = std::sqrt(sq);
        for (double& v : r) v /= u.norm[i];
    }
    return u;
}

/// Maps a gradient on unit rows back to the raw rows and accumulates it.
inline void accumulate_through_normalization(const UnitRows& u, const Matrix& g_unit, Matrix& out) {
    for (std::size_t i = 0; i < g_unit.rows(); ++i) {
        const auto ur = u.unit.row(i);
        const auto gr = g_unit.row(i);
        double proj = 0.0;
        for (std::size_t j = 0; j < ur.size(); ++j) proj += gr[j] * ur[j];
        auto o = out.row(i);
        for (std::size_t j = 0; j < ur.size(); ++j) o[j] += (gr[j] - proj * ur[j]) / u.norm[i];
    }
}

/// Shared InfoNCE kernel. Row i of `anchors` pairs with row i of `positives`;
/// the negatives for row i are the rows j != i of every matrix in `negatives`.
/// When `upstream` is non-null, d(sum_i upstream_i * L_i) is added into the
/// gradient buffers (which may alias each other when inputs alias).
inline std::vector<double> contrastive(const Matrix& anchors, const Matrix& positives,
                                       std::span<const Matrix* const> negatives,
                                       const LossConfig& cfg, const double* upstream,
                                       Matrix* grad_anchors, Matrix* grad_positives,
                                       std::span<Matrix* const> grad_negatives) {
    cfg.validate();
    const std::size_t n = anchors.rows();
    if (n < 2) throw UsageError("contrastive loss: need at least 2 samples for negatives");
    if (!anchors.same_shape(positives)) throw UsageError("contrastive loss: anchor/positive shape mismatch");
    if (negatives.empty()) throw UsageError("contrastive loss: empty negative pool");
    for (const Matrix* neg : negatives) {
        if (!neg->same_shape(anchors)) throw UsageError("contrastive loss: negative pool shape mismatch");
    }

    const UnitRows ua = unit_rows(anchors);
    const UnitRows up = unit_rows(positives);
    std::vector<UnitRows> un;
    un.reserve(negatives.size());
    for (const Matrix* neg : negatives) un.push_back(unit_rows(*neg));

    const bool with_grad = upstream != nullptr;
    Matrix ga, gp;
    std::vector<Matrix> gn;
    if (with_grad) {
        ga = Matrix(n, anchors.cols());
        gp = Matrix(n, anchors.cols());
        for (std::size_t m = 0; m < un.size(); ++m) gn.emplace_back(n, anchors.cols());
    }

    const double inv_tau = 1.0 / cfg.tau;
    const bool include_positive = cfg.mode == DenominatorMode::simclr_standard;
    std::vector<double> losses(n);
    std::vector<double> logits;
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = ua.unit.row(i);
        auto dot = [&](std::span<const double> b) {
            double s = 0.0;
            for (std::size_t d = 0; d < a.size(); ++d) s += a[d] * b[d];
            return s;
        };
        const double pos = dot(up.unit.row(i)) * inv_tau;
        // logits layout: for each pool m, rows j != i in order.
        logits.clear();
        for (const auto& pool : un) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) logits.push_back(dot(pool.unit.row(j)) * inv_tau);
            }
        }
        double mx = *std::max_element(logits.begin(), logits.end());
        if (include_positive) mx = std::max(mx, pos);
        double denom = include_positive ? std::exp(pos - mx) : 0.0;
        for (double l : logits) denom += std::exp(l - mx);
        const double log_denom = mx + std::log(denom);
        losses[i] = log_denom - pos;

        if (!with_grad) continue;
        const double w = upstream[i];
        if (w == 0.0) continue;
        // dL/dpos and dL/dlogit, scaled by the upstream weight and 1/tau.
        const double d_pos = w * inv_tau * ((include_positive ? std::exp(pos - log_denom) : 0.0) - 1.0);
        auto ga_row = ga.row(i);
        const auto p = up.unit.row(i);
        for (std::size_t d = 0; d < a.size(); ++d) {
            ga_row[d] += d_pos * p[d];
            gp(i, d) += d_pos * a[d];
        }
        std::size_t idx = 0;
        for (std::size_t m = 0; m < un.size(); ++m) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double d_neg = w * inv_tau * std::exp(logits[idx++] - log_denom);
                const auto b = un[m].unit.row(j);
                auto gn_row = gn[m].row(j);
                for (std::size_t d = 0; d < a.size(); ++d) {
                    ga_row[d] += d_neg * b[d];
                    gn_row[d] += d_neg * a[d];
                }
            }
        }
    }

    if (with_grad) {
        if (grad_negatives.size() != negatives.size()) {
            throw UsageError("contrastive loss: gradient buffer count mismatch");
        }
        accumulate_through_normalization(ua, ga, *grad_anchors);
        accumulate_through_normalization(up, gp, *grad_positives);
        for (std::size_t m = 0; m < un.size(); ++m) {
            accumulate_through_normalization(un[m], gn[m], *grad_negatives[m]);
        }
    }
    return losses;
}

}  // namespace detail

/// Per-sample InfoNCE: L_i = -log(exp(sim(a_i, p_i)/tau) / D_i), where D_i sums
/// exp(sim(a_i, n_j)/tau) over rows j != i of every negative-pool matrix, plus
/// the positive term in simclr_standard mode.
inline std::vector<double> info_nce(const Matrix& anchors, const Matrix& positives,
                                    std::span<const Matrix* const> negatives, const LossConfig& cfg) {
    return detail::contrastive(anchors, positives, negatives, cfg, nullptr, nullptr, nullptr, {});
}

/// Time-domain loss on encoder outputs; negatives are the other samples' h_time and h_time_aug.
inline std::vector<double> time_loss(const EmbeddingSet& e, const LossConfig& cfg) {
    const Matrix* pool[] = {&e.h_time, &e.h_time_aug};
    return info_nce(e.h_time, e.h_time_aug, pool, cfg);
}

/// Symbol-domain loss, the mirror of time_loss on h_symbol / h_symbol_aug.
inline std::vector<double> symbol_loss(const EmbeddingSet& e, const LossConfig& cfg) {
    const Matrix* pool[] = {&e.h_symbol, &e.h_symbol_aug};
    return info_nce(e.h_symbol, e.h_symbol_aug, pool, cfg);
}

/// Cross-domain InfoNCE: anchor a_i, positive b_i, negatives the other rows of b.
inline std::vector<double> cross_pair_loss(const Matrix& a, const Matrix& b, const LossConfig& cfg) {
    const Matrix* pool[] = {&b};
    return info_nce(a, b, pool, cfg);
}

/// L_TS,i = sum over a in {z_time, z_time_aug}, b in {z_symbol, z_symbol_aug}
/// of (L_{z_time,z_symbol} - L_{a,b} + delta). The (z_time, z_symbol) term is delta.
inline std::vector<double> consistency_loss(const EmbeddingSet& e, const LossConfig& cfg) {
    const auto anchor = cross_pair_loss(e.z_time, e.z_symbol, cfg);
    std::vector<double> out(anchor.size(), 0.0);
    const Matrix* as[] = {&e.z_time, &e.z_time_aug};
    const Matrix* bs[] = {&e.z_symbol, &e.z_symbol_aug};
    for (const Matrix* a : as) {
        for (const Matrix* b : bs) {
            const auto pair = (a == as[0] && b == bs[0]) ? anchor : cross_pair_loss(*a, *b, cfg);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += anchor[i] - pair[i] + cfg.delta;
        }
    }
    return out;
}

struct LossBreakdown {
    std::vector<double> time;         // per-sample L_T
    std::vector<double> symbol;       // per-sample L_S
    std::vector<double> consistency;  // per-sample L_TS
    double time_mean = 0.0;
    double symbol_mean = 0.0;
    double consistency_mean = 0.0;
    double total = 0.0;  // time_mean + symbol_mean + lambda * consistency_mean
};

inline double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline EmbeddingSet zero_like(const EmbeddingSet& e) {
    auto z = [](const Matrix& m) { return Matrix(m.rows(), m.cols()); };
    return {z(e.h_time), z(e.h_time_aug), z(e.h_symbol), z(e.h_symbol_aug),
            z(e.z_time), z(e.z_time_aug), z(e.z_symbol), z(e.z_symbol_aug)};
}

/// Total objective. When `grads` is non-null it receives d total / d embedding
/// for all eight matrices (overwritten).
inline LossBreakdown total_loss(const EmbeddingSet& e, const LossConfig& cfg,
                                EmbeddingSet* grads = nullptr) {
    cfg.validate();
    const std::size_t n = e.batch();
    if (n < 2) throw UsageError("total_loss: batch must have at least 2 samples");

    LossBreakdown out;
    if (grads) *grads = zero_like(e);
    const std::vector<double> unit_weight(n, 1.0 / static_cast<double>(n));

    {
        const Matrix* pool[] = {&e.h_time, &e.h_time_aug};
        Matrix* gpool[] = {grads ? &grads->h_time : nullptr, grads ? &grads->h_time_aug : nullptr};
        out.time = detail::contrastive(e.h_time, e.h_time_aug, pool, cfg,
                                       grads ? unit_weight.data() : nullptr,
                                       grads ? &grads->h_time : nullptr,
                                       grads ? &grads->h_time_aug : nullptr, gpool);
    }
    {
        const Matrix* pool[] = {&e.h_symbol, &e.h_symbol_aug};
        Matrix* gpool[] = {grads ? &grads->h_symbol : nullptr, grads ? &grads->h_symbol_aug : nullptr};
        out.symbol = detail::contrastive(e.h_symbol, e.h_symbol_aug, pool, cfg,
                                         grads ? unit_weight.data() : nullptr,
                                         grads ? &grads->h_symbol : nullptr,
                                         grads ? &grads->h_symbol_aug : nullptr, gpool);
    }

    // L_TS = 4 L_{zt,zs} - sum_{a,b} L_{a,b} + 4 delta; the (zt, zs) pair nets to 3 L_{zt,zs}.
    const double lam = cfg.lambda / static_cast<double>(n);
    struct Pair {
        const Matrix* a;
        const Matrix* b;
        Matrix* ga;
        Matrix* gb;
        double coeff;
    };
    const Pair pairs[] = {
        {&e.z_time, &e.z_symbol, grads ? &grads->z_time : nullptr, grads ? &grads->z_symbol : nullptr, 3.0},
        {&e.z_time, &e.z_symbol_aug, grads ? &grads->z_time : nullptr, grads ? &grads->z_symbol_aug : nullptr, -1.0},
        {&e.z_time_aug, &e.z_symbol, grads ? &grads->z_time_aug : nullptr, grads ? &grads->z_symbol : nullptr, -1.0},
        {&e.z_time_aug, &e.z_symbol_aug, grads ? &grads->z_time_aug : nullptr, grads ? &grads->z_symbol_aug : nullptr, -1.0},
    };
    out.consistency.assign(n, 0.0);
    std::vector<double> anchor_loss;
    for (const auto& p : pairs) {
        const std::vector<double> w(n, lam * p.coeff);
        const Matrix* pool[] = {p.b};
        Matrix* gpool[] = {p.gb};
        const bool want = grads != nullptr && cfg.lambda != 0.0;
        auto l = detail::contrastive(*p.a, *p.b, pool, cfg, want ? w.data() : nullptr, p.ga, p.gb,
                                     want ? std::span<Matrix* const>(gpool) : std::span<Matrix* const>{});
        if (anchor_loss.empty()) anchor_loss = l;
        for (std::size_t i = 0; i < n; ++i) out.consistency[i] += anchor_loss[i] - l[i] + cfg.delta;
    }

    out.time_mean = mean_of(out.time);
    out.symbol_mean = mean_of(out.symbol);
    out.consistency_mean = mean_of(out.consistency);
    out.total = out.time_mean + out.symbol_mean + cfg.lambda * out.consistency_mean;
    return out;
}

}  // namespace stc
