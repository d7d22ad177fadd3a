#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "stc/data.hpp"
#include "stc/error.hpp"
#include "stc/model.hpp"
#include "stc/nn.hpp"
#include "stc/trainer.hpp"

namespace stc {

enum class ProbeMode { zt_only, zt_plus_zs };

inline const char* to_string(ProbeMode m) { return m == ProbeMode::zt_only ? "zt" : "zt-zs"; }

inline ProbeMode probe_mode_from_string(const std::string& s) {
    if (s == "zt") return ProbeMode::zt_only;
    if (s == "zt-zs" || s == "zt+zs") return ProbeMode::zt_plus_zs;
    throw UsageError("unknown probe mode '" + s + "' (expected zt or zt-zs)");
}

inline std::vector<int> labels_of(std::span<const TimeSeriesSample> samples) {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        if (!s.label) throw DataError("labeled windows required for evaluation");
        out.push_back(*s.label);
    }
    return out;
}

/// Frozen-model features: z_time, or z_time concatenated with z_symbol.
inline Matrix probe_features(const StcModel& model, std::span<const TimeSeriesSample> samples, ProbeMode mode) {
    if (samples.empty()) throw UsageError("probe_features: no samples");
    for (const auto& s : samples) check_compatible(model, s.channels(), s.length());
    Matrix zt = embed_time(model, time_features(model.stats, samples)).z;
    if (mode == ProbeMode::zt_only) return zt;
    const CutLines cuts = model.cutlines();
    std::vector<SymbolVector> sv;
    sv.reserve(samples.size());
    for (const auto& s : samples) sv.push_back(symbolize(s, cuts));
    return hstack(zt, embed_symbol(model, symbol_features(sv)).z);
}

/// Linear probe: logistic regression on probe_train embeddings, scored on test.
inline double probe(const StcModel& model, const DatasetSplit& split, ProbeMode mode, const LogisticConfig& cfg) {
    const LinearClassifier clf =
        train_logistic(probe_features(model, split.probe_train, mode), labels_of(split.probe_train), cfg);
    return accuracy(clf.predict(probe_features(model, split.test, mode)), labels_of(split.test));
}

struct BaselineConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    double lr = 5e-4;
    std::vector<std::size_t> hidden{128, 64};
    std::uint64_t seed = 0;
};

/// Supervised MLP from scratch on channel-standardized raw windows.
inline double baseline_mlp(const DatasetSplit& split, const BaselineConfig& cfg) {
    const ChannelStats stats = fit_channel_stats(split.probe_train);
    const Matrix x = time_features(stats, split.probe_train);
    const std::vector<int> y = labels_of(split.probe_train);
    const int classes = *std::max_element(y.begin(), y.end()) + 1;

    std::vector<std::size_t> sizes{x.cols()};
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(static_cast<std::size_t>(classes));
    std::vector<Activation> acts(sizes.size() - 1, Activation::relu);
    acts.back() = Activation::identity;
    Rng rng(cfg.seed);
    MlpParams net = MlpParams::init(sizes, acts, rng);
    Rng shuffle_rng = rng.split(1);

    AdamState adam;
    adam.config.lr = cfg.lr;
    std::vector<ParamRef> params;
    append_params(params, "mlp", net);
    std::vector<std::size_t> order(x.rows());
    const std::size_t batch = std::max<std::size_t>(1, std::min(cfg.batch_size, x.rows()));
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t b = 0; b < x.rows(); b += batch) {
            const std::size_t n = std::min(batch, x.rows() - b);
            Matrix xb(n, x.cols());
            std::vector<int> yb(n);
            for (std::size_t r = 0; r < n; ++r) {
                std::copy(x.row(order[b + r]).begin(), x.row(order[b + r]).end(), xb.row(r).begin());
                yb[r] = y[order[b + r]];
            }
            const MlpActivations acts_b = mlp_forward(net, xb);
            const CrossEntropy ce = softmax_cross_entropy(acts_b.output, yb);
            std::vector<Matrix> grads;
            append_grads(grads, mlp_backward(net, acts_b, ce.grad));
            adam_step(adam, params, grads);
        }
    }
    const Matrix xt = time_features(stats, split.test);
    return accuracy(argmax_rows(mlp_infer(net, xt)), labels_of(split.test));
}

/// Logistic regression on channel-standardized raw windows.
inline double baseline_lr(const DatasetSplit& split, const LogisticConfig& cfg) {
    const ChannelStats stats = fit_channel_stats(split.probe_train);
    const LinearClassifier clf =
        train_logistic(time_features(stats, split.probe_train), labels_of(split.probe_train), cfg);
    return accuracy(clf.predict(time_features(stats, split.test)), labels_of(split.test));
}

// ---------------------------------------------------------------------------
// Pairwise benchmark

struct BenchmarkRow {
    int source = 0;
    int target = 0;
    std::string method;  // stc | mlp | lr
    std::string mode;    // zt | zt-zs | raw
    double accuracy = 0.0;

    friend bool operator==(const BenchmarkRow&, const BenchmarkRow&) = default;
};

struct BenchmarkMatrix {
    std::vector<BenchmarkRow> rows;
    std::vector<std::string> failures;

    /// (method, mode) columns in first-seen order.
    [[nodiscard]] std::vector<std::pair<std::string, std::string>> columns() const {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& r : rows) {
            const std::pair<std::string, std::string> key{r.method, r.mode};
            if (std::find(out.begin(), out.end(), key) == out.end()) out.push_back(key);
        }
        return out;
    }

    [[nodiscard]] double average(const std::string& method, const std::string& mode) const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : rows) {
            if (r.method == method && r.mode == mode) {
                sum += r.accuracy;
                ++n;
            }
        }
        if (n == 0) throw UsageError("no benchmark rows for " + method + "/" + mode);
        return sum / static_cast<double>(n);
    }

    [[nodiscard]] std::optional<double> find(int source, int target, const std::string& method,
                                             const std::string& mode) const {
        for (const auto& r : rows) {
            if (r.source == source && r.target == target && r.method == method && r.mode == mode) return r.accuracy;
        }
        return std::nullopt;
    }
};

struct BenchmarkConfig {
    TrainConfig train;
    LogisticConfig probe;
    BaselineConfig baseline;
    std::vector<ProbeMode> modes{ProbeMode::zt_only};
    bool baselines = false;
    bool probe_on_target = false;
    std::size_t jobs = 1;
};

/// Every ordered (source, target) pair with source != target. Pretraining
/// depends only on the source subject, so it runs once per source. Rows are
/// ordered by target, then source, then column, whatever the execution order.
inline BenchmarkMatrix pairwise_benchmark(std::span<const TimeSeriesSample> samples, std::span<const int> subjects,
                                          const BenchmarkConfig& cfg) {
    if (subjects.size() < 2) throw UsageError("pairwise_benchmark: need at least 2 subjects");
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        for (std::size_t j = i + 1; j < subjects.size(); ++j) {
            if (subjects[i] == subjects[j]) throw UsageError("pairwise_benchmark: duplicate subject");
        }
    }
    for (int s : subjects) require_all_classes(subject_samples(samples, s), s);

    struct SourceResult {
        std::vector<BenchmarkRow> rows;
        std::vector<std::string> failures;
    };
    std::vector<SourceResult> per_source(subjects.size());

    auto run_source = [&](std::size_t si) {
        const int source = subjects[si];
        auto& out = per_source[si];
        std::optional<StcModel> model;
        try {
            const auto pre = subject_samples(samples, source);
            std::vector<TimeSeriesSample> unlabeled = pre;
            for (auto& s : unlabeled) s.label.reset();
            model = pretrain(unlabeled, cfg.train).model;
        } catch (const std::exception& e) {
            out.failures.push_back("pretrain on subject " + std::to_string(source) + ": " + e.what());
            return;
        }
        for (int target : subjects) {
            if (target == source) continue;
            try {
                const DatasetSplit split = cfg.probe_on_target ? make_target_probe_split(samples, source, target)
                                                               : make_split(samples, source, target);
                for (ProbeMode m : cfg.modes) {
                    out.rows.push_back({source, target, "stc", to_string(m), probe(*model, split, m, cfg.probe)});
                }
                if (cfg.baselines) {
                    out.rows.push_back({source, target, "mlp", "raw", baseline_mlp(split, cfg.baseline)});
                    out.rows.push_back({source, target, "lr", "raw", baseline_lr(split, cfg.probe)});
                }
            } catch (const std::exception& e) {
                out.failures.push_back("pair " + std::to_string(source) + "->" + std::to_string(target) + ": " +
                                       e.what());
            }
        }
    };

    const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, subjects.size()));
    if (jobs == 1) {
        for (std::size_t i = 0; i < subjects.size(); ++i) run_source(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        for (std::size_t w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < subjects.size(); i = next++) run_source(i);
            });
        }
        for (auto& t : workers) t.join();
    }

    BenchmarkMatrix matrix;
    for (const auto& r : per_source) {
        matrix.rows.insert(matrix.rows.end(), r.rows.begin(), r.rows.end());
        matrix.failures.insert(matrix.failures.end(), r.failures.begin(), r.failures.end());
    }
    auto position = [&](int s) { return std::find(subjects.begin(), subjects.end(), s) - subjects.begin(); };
    std::stable_sort(matrix.rows.begin(), matrix.rows.end(), [&](const BenchmarkRow& a, const BenchmarkRow& b) {
        if (a.target != b.target) return position(a.target) < position(b.target);
        return position(a.source) < position(b.source);
    });
    return matrix;
}

// ---------------------------------------------------------------------------
// Reports

inline constexpr const char* kAverageTag = "average";

/// CSV with columns source,target,method,mode,accuracy; one average row per
/// column after the pair rows. Metadata goes in leading '#' lines.
inline void write_results_csv(std::ostream& out, const BenchmarkMatrix& m,
                              const std::vector<std::pair<std::string, std::string>>& metadata = {}) {
    if (m.rows.empty()) throw UsageError("report: empty benchmark matrix");
    for (const auto& [k, v] : metadata) out << "# " << k << "=" << v << "\n";
    out << "source,target,method,mode,accuracy\n";
    char buf[64];
    for (const auto& r : m.rows) {
        std::snprintf(buf, sizeof buf, "%.17g", r.accuracy);
        out << r.source << ',' << r.target << ',' << r.method << ',' << r.mode << ',' << buf << '\n';
    }
    for (const auto& [method, mode] : m.columns()) {
        std::snprintf(buf, sizeof buf, "%.17g", m.average(method, mode));
        out << kAverageTag << ',' << kAverageTag << ',' << method << ',' << mode << ',' << buf << '\n';
    }
}

inline BenchmarkMatrix read_results_csv(std::istream& in) {
    BenchmarkMatrix m;
    std::string line;
    bool header_seen = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (line != "source,target,method,mode,accuracy") {
                throw DataError("results csv: unexpected header at line " + std::to_string(line_no));
            }
            header_seen = true;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 5) throw DataError("results csv: malformed row at line " + std::to_string(line_no));
        if (cells[0] == kAverageTag) continue;
        try {
            m.rows.push_back({std::stoi(cells[0]), std::stoi(cells[1]), cells[2], cells[3], std::stod(cells[4])});
        } catch (const std::exception&) {
            throw DataError("results csv: malformed row at line " + std::to_string(line_no));
        }
    }
    if (!header_seen) throw DataError("results csv: missing header");
    return m;
}

/// Aligned text table: one line per (source, target), one column per
/// method/mode, and a `best` column naming the highest-scoring column.
inline std::string format_results_table(const BenchmarkMatrix& m) {
    if (m.rows.empty()) throw UsageError("report: empty benchmark matrix");
    const auto cols = m.columns();
    std::vector<std::pair<int, int>> pairs;
    for (const auto& r : m.rows) {
        if (std::find(pairs.begin(), pairs.end(), std::pair{r.source, r.target}) == pairs.end()) {
            pairs.emplace_back(r.source, r.target);
        }
    }
    std::ostringstream out;
    char buf[64];
    auto label = [](const std::pair<std::string, std::string>& c) { return c.first + "/" + c.second; };
    out << "source  target";
    for (const auto& c : cols) {
        std::snprintf(buf, sizeof buf, "  %12s", label(c).c_str());
        out << buf;
    }
    out << "  best\n";
    auto emit = [&](const std::string& s, const std::string& t, const std::vector<std::optional<double>>& vals) {
        std::snprintf(buf, sizeof buf, "%6s  %6s", s.c_str(), t.c_str());
        out << buf;
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (vals[i]) {
                std::snprintf(buf, sizeof buf, "  %12.3f", *vals[i]);
                if (!best || *vals[i] > *vals[*best]) best = i;
            } else {
                std::snprintf(buf, sizeof buf, "  %12s", "-");
            }
            out << buf;
        }
        out << "  " << (best ? label(cols[*best]) : std::string("-")) << "\n";
    };
    for (const auto& [s, t] : pairs) {
        std::vector<std::optional<double>> vals;
        for (const auto& c : cols) vals.push_back(m.find(s, t, c.first, c.second));
        emit(std::to_string(s), std::to_string(t), vals);
    }
    std::vector<std::optional<double>> avg;
    for (const auto& c : cols) avg.push_back(m.average(c.first, c.second));
    emit(kAverageTag, "", avg);
    return out.str();
}

/// Writes `path` (CSV) and `path` with extension .txt (aligned table).
inline void report(const BenchmarkMatrix& m, const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, std::string>>& metadata = {}) {
    if (m.rows.empty()) throw UsageError("report: empty benchmark matrix");
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DataError("cannot write " + path.string());
        write_results_csv(out, m, metadata);
    }
    auto txt = path;
    txt.replace_extension(".txt");
    std::ofstream out(txt, std::ios::binary);
    if (!out) throw DataError("cannot write " + txt.string());
    out << format_results_table(m);
}

}  // namespace stc
