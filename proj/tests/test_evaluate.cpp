#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "stc/checkpoint.hpp"
#include "stc/evaluate.hpp"

using namespace stc;

namespace {

BenchmarkConfig small_benchmark() {
    BenchmarkConfig c;
    c.train = fixtures::small_train(2);
    c.probe.epochs = 50;
    c.baseline.epochs = 5;
    c.baseline.hidden = {16};
    return c;
}

}  // namespace

TEST(Probe, AccuracyInRangeAndModelUntouched) {
    const auto data = fixtures::small_synth();
    const auto split = make_split(data, 1, 2);
    const auto model = pretrain(split.pretrain, fixtures::small_train(2)).model;
    const auto before = encode_checkpoint(model, {}, 0);
    for (auto mode : {ProbeMode::zt_only, ProbeMode::zt_plus_zs}) {
        const double acc = probe(model, split, mode, LogisticConfig{});
        EXPECT_GE(acc, 0.0);
        EXPECT_LE(acc, 1.0);
    }
    EXPECT_EQ(encode_checkpoint(model, {}, 0), before);
}

TEST(Probe, FeatureWidths) {
    const auto data = fixtures::small_synth();
    const auto cfg = fixtures::small_train(0);
    const auto model = pretrain(fixtures::unlabeled(data), cfg).model;
    EXPECT_EQ(probe_features(model, data, ProbeMode::zt_only).cols(), cfg.z_dim);
    EXPECT_EQ(probe_features(model, data, ProbeMode::zt_plus_zs).cols(), 2 * cfg.z_dim);
    EXPECT_EQ(probe_mode_from_string("zt-zs"), ProbeMode::zt_plus_zs);
    EXPECT_THROW(probe_mode_from_string("zs"), UsageError);
}

TEST(Probe, UnlabeledWindowsRejected) {
    const auto data = fixtures::small_synth();
    EXPECT_THROW(labels_of(fixtures::unlabeled(data)), DataError);
}

TEST(Benchmark, TwoSubjects) {
    const auto data = fixtures::small_synth();
    const int subjects[] = {1, 2};
    const auto m = pairwise_benchmark(data, subjects, small_benchmark());
    ASSERT_EQ(m.rows.size(), 2u);
    EXPECT_TRUE(m.failures.empty());
    EXPECT_EQ(m.rows[0].source, 2);
    EXPECT_EQ(m.rows[0].target, 1);
    EXPECT_DOUBLE_EQ(m.average("stc", "zt"), (m.rows[0].accuracy + m.rows[1].accuracy) / 2.0);
    std::ostringstream csv;
    write_results_csv(csv, m);
    EXPECT_NE(csv.str().find("average,average,stc,zt,"), std::string::npos);
}

TEST(Benchmark, FiveSubjectsAllOrderedPairs) {
    const auto data = fixtures::small_synth(5, 4);
    const int subjects[] = {1, 2, 3, 4, 5};
    auto cfg = small_benchmark();
    cfg.train.epochs = 1;
    cfg.train.batch_size = 4;
    cfg.modes = {ProbeMode::zt_only, ProbeMode::zt_plus_zs};
    const auto m = pairwise_benchmark(data, subjects, cfg);
    EXPECT_EQ(m.rows.size(), 40u);
    for (int s : subjects) {
        for (int t : subjects) {
            if (s != t) {
                EXPECT_TRUE(m.find(s, t, "stc", "zt").has_value());
            }
        }
    }
}

TEST(Benchmark, ThreadedRunMatchesSerial) {
    const auto data = fixtures::small_synth(3, 4);
    const int subjects[] = {1, 2, 3};
    auto cfg = small_benchmark();
    cfg.train.batch_size = 4;
    const auto serial = pairwise_benchmark(data, subjects, cfg);
    cfg.jobs = 3;
    const auto threaded = pairwise_benchmark(data, subjects, cfg);
    EXPECT_EQ(serial.rows, threaded.rows);
}

TEST(Benchmark, BaselinesAndReportRoundTrip) {
    const auto data = fixtures::small_synth();
    const int subjects[] = {1, 2};
    auto cfg = small_benchmark();
    cfg.baselines = true;
    const auto m = pairwise_benchmark(data, subjects, cfg);
    ASSERT_EQ(m.rows.size(), 6u);
    const auto path = std::filesystem::temp_directory_path() / "stc_report.csv";
    report(m, path, {{"seed", "1"}});
    std::ifstream in(path);
    const auto back = read_results_csv(in);
    EXPECT_EQ(back.rows, m.rows);
    auto txt = path;
    txt.replace_extension(".txt");
    EXPECT_TRUE(std::filesystem::exists(txt));
    std::filesystem::remove(path);
    std::filesystem::remove(txt);
    EXPECT_THROW(report(BenchmarkMatrix{}, path), UsageError);
}

TEST(Benchmark, RejectsBadSubjects) {
    const auto data = fixtures::small_synth();
    const int one[] = {1};
    const int dup[] = {1, 1};
    const int missing[] = {1, 9};
    EXPECT_THROW(pairwise_benchmark(data, one, small_benchmark()), UsageError);
    EXPECT_THROW(pairwise_benchmark(data, dup, small_benchmark()), UsageError);
    EXPECT_THROW(pairwise_benchmark(data, missing, small_benchmark()), DataError);
}

TEST(BaselineMlp, LearnsSeparableTask) {
    SynthConfig sc;
    sc.channels = 2;
    sc.length = 32;
    sc.n_per_class = 20;
    SynthSpec clean{0.0, 1.0, 0.05, 1.0, 1.0};
    const auto data = synth_generate({{1, clean}, {2, clean}}, sc);
    const auto split = make_split(data, 1, 2);
    BaselineConfig cfg;
    cfg.epochs = 60;
    cfg.batch_size = 16;
    cfg.lr = 1e-3;
    cfg.hidden = {32};
    const double acc = baseline_mlp(split, cfg);
    EXPECT_GE(acc, 0.9);
    EXPECT_EQ(acc, baseline_mlp(split, cfg));
}

TEST(BaselineMlp, ChanceOnShuffledLabels) {
    SynthConfig sc;
    sc.channels = 2;
    sc.length = 32;
    sc.n_per_class = 60;
    SynthSpec clean{0.0, 1.0, 0.05, 1.0, 1.0};
    auto data = synth_generate({{1, clean}, {2, clean}}, sc);
    Rng rng(4);
    for (auto& s : data) {
        if (s.subject_id == 2) s.label = static_cast<int>(rng.below(3));
    }
    const auto split = make_split(data, 1, 2);
    BaselineConfig cfg;
    cfg.epochs = 20;
    cfg.hidden = {16};
    EXPECT_NEAR(baseline_mlp(split, cfg), 1.0 / 3.0, 0.12);
}
