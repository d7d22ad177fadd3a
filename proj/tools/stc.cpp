// stc: symbol-temporal consistency pretraining and cross-subject evaluation.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stc/stc.hpp"

namespace fs = std::filesystem;

namespace {

using Metadata = std::vector<std::pair<std::string, std::string>>;

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct CommonOptions {
    std::string config_file;
    std::vector<std::string> overrides;  // key=value
};

void add_config_options(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_file, "key = value config file (dotted keys)");
    cmd->add_option("--set", opts.overrides, "override a config key, e.g. --set loss.tau=0.5 (repeatable)");
}

stc::StcConfig load_config(const CommonOptions& opts) {
    stc::StcConfig cfg;
    if (!opts.config_file.empty()) stc::apply_config_file(cfg, opts.config_file);
    for (const auto& kv : opts.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw stc::UsageError("--set expects key=value, got '" + kv + "'");
        stc::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.train.validate();
    return cfg;
}

std::vector<int> parse_subjects(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            const int v = std::stoi(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw stc::UsageError("invalid subject id '" + item + "'");
        }
    }
    if (out.empty()) throw stc::UsageError("no subjects given");
    return out;
}

void require_subjects(const std::vector<stc::TimeSeriesSample>& samples, const std::vector<int>& subjects) {
    std::set<int> present;
    for (const auto& s : samples) present.insert(s.subject_id);
    for (int s : subjects) {
        if (!present.contains(s)) throw stc::UsageError("subject " + std::to_string(s) + " not present in data");
    }
}

void write_stats(const fs::path& path, const stc::ChannelStats& stats) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw stc::DataError("cannot write stats " + path.string());
    out << "# stc-channel-stats\nchannel,mean,sigma\n";
    for (std::size_t k = 0; k < stats.channels(); ++k) {
        out << k << ',' << stc::format_double(stats.mean[k]) << ',' << stc::format_double(stats.sigma[k]) << '\n';
    }
}

stc::ChannelStats read_stats(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw stc::DataError("cannot open stats " + path.string());
    stc::ChannelStats stats;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#' || line.rfind("channel,", 0) == 0) continue;
        std::stringstream ss(line);
        std::string k, mean, sigma;
        if (!std::getline(ss, k, ',') || !std::getline(ss, mean, ',') || !std::getline(ss, sigma)) {
            throw stc::DataError(path.string() + ": malformed stats row '" + line + "'");
        }
        stats.mean.push_back(std::stod(mean));
        stats.sigma.push_back(std::stod(sigma));
    }
    if (stats.mean.empty()) throw stc::DataError(path.string() + ": no channel statistics");
    return stats;
}

// ---------------------------------------------------------------------------

struct SynthOptions {
    std::string out;
    std::size_t subjects = 3;
    std::uint64_t seed = 0;
    stc::SynthConfig synth;
};

int cmd_synth(const SynthOptions& o) {
    stc::SynthConfig sc = o.synth;
    sc.seed = o.seed;
    const auto specs = stc::synth_subject_specs(o.subjects, o.seed);
    const auto samples = stc::synth_generate(specs, sc);
    fs::create_directories(o.out);
    Metadata meta{{"generator", "synthetic"},
                  {"seed", std::to_string(o.seed)},
                  {"subjects", std::to_string(o.subjects)},
                  {"n_per_class", std::to_string(sc.n_per_class)},
                  {"sample_rate", stc::format_double(sc.sample_rate)}};
    for (const auto& [id, s] : specs) {
        meta.emplace_back("subject." + std::to_string(id),
                          "shift=" + stc::format_double(s.shift) + " warp=" + stc::format_double(s.warp) +
                              " noise_std=" + stc::format_double(s.noise_std) +
                              " amplitude=" + stc::format_double(s.amplitude) +
                              " phase_jitter=" + stc::format_double(s.phase_jitter));
    }
    const fs::path path = fs::path(o.out) / stc::kWindowsFile;
    stc::write_windows_csv(path, samples, meta);
    std::cout << "wrote " << samples.size() << " windows for " << specs.size() << " subjects to " << path.string()
              << "\n";
    return kOk;
}

struct PrepareOptions {
    std::string pamap2;
    std::string out;
    std::string subjects = "1,2,5,6,8";
    CommonOptions common;
};

int cmd_prepare(const PrepareOptions& o) {
    const auto cfg = load_config(o.common);
    const auto subjects = parse_subjects(o.subjects);
    const auto streams = stc::load_pamap2(o.pamap2, subjects);
    const auto qualifying = stc::qualifying_subjects(streams);
    std::vector<stc::TimeSeriesSample> samples;
    for (const auto& s : streams) {
        if (std::find(qualifying.begin(), qualifying.end(), s.subject_id) == qualifying.end()) {
            std::cerr << "skipping subject " << s.subject_id << ": less than 90 s of some activity\n";
            continue;
        }
        auto w = stc::window(s, cfg.window, cfg.stride);
        samples.insert(samples.end(), w.begin(), w.end());
    }
    if (samples.empty()) throw stc::DataError("no qualifying subjects");
    fs::create_directories(o.out);
    Metadata meta{{"generator", "pamap2"}, {"data.window", std::to_string(cfg.window)},
                  {"data.stride", std::to_string(cfg.stride)}};
    stc::write_windows_csv(fs::path(o.out) / stc::kWindowsFile, samples, meta);
    std::cout << "wrote " << samples.size() << " windows\n";
    return kOk;
}

struct PretrainOptions {
    std::string data;
    int source = 0;
    std::string out;
    std::string log;
    CommonOptions common;
};

int cmd_pretrain(const PretrainOptions& o) {
    const auto cfg = load_config(o.common);
    const std::vector<int> subjects{o.source};
    auto samples = stc::load_dataset(o.data, subjects, cfg.window, cfg.stride);
    require_subjects(samples, subjects);
    auto pre = stc::subject_samples(samples, o.source);
    for (auto& s : pre) s.label.reset();

    const auto result = stc::pretrain(pre, cfg.train, [](const stc::EpochRecord& e) {
        std::cerr << "epoch " << e.epoch << " total " << e.total << " lr " << e.lr << "\n";
    });
    Metadata meta = stc::config_pairs(cfg);
    meta.emplace_back("source", std::to_string(o.source));
    stc::save_checkpoint(result.model, meta, cfg.train.seed, o.out);

    const std::string log_path = o.log.empty() ? o.out + ".log.csv" : o.log;
    std::ofstream log(log_path, std::ios::binary);
    if (!log) throw stc::DataError("cannot write " + log_path);
    stc::write_training_log(log, result.report, meta);
    std::cerr << "pretrained " << result.report.epochs.size() << " epochs in " << result.report.seconds << " s\n";
    std::cout << "wrote " << o.out << " and " << log_path << "\n";
    return kOk;
}

struct ProbeOptions {
    std::string ckpt;
    std::string data;
    int source = 0;
    int target = 0;
    std::string mode = "zt";
    std::string probe_on = "source";
    CommonOptions common;
};

int cmd_probe(const ProbeOptions& o) {
    if (o.source == o.target) throw stc::UsageError("--source and --target must differ");
    if (o.probe_on != "source" && o.probe_on != "target") throw stc::UsageError("--probe-on must be source or target");
    const auto cfg = load_config(o.common);
    const auto mode = stc::probe_mode_from_string(o.mode);
    const auto ck = stc::load_checkpoint(o.ckpt);
    const std::vector<int> subjects{o.source, o.target};
    const auto samples = stc::load_dataset(o.data, subjects, ck.model.dims.length, cfg.stride);
    require_subjects(samples, subjects);
    const auto split = o.probe_on == "target" ? stc::make_target_probe_split(samples, o.source, o.target)
                                              : stc::make_split(samples, o.source, o.target);
    const double acc = stc::probe(ck.model, split, mode, cfg.probe);
    std::printf("source=%d target=%d mode=%s probe_on=%s accuracy=%.6f\n", o.source, o.target, stc::to_string(mode),
                o.probe_on.c_str(), acc);
    return kOk;
}

struct BenchmarkOptions {
    std::string data;
    std::string subjects = "1,2,5,6,8";
    std::string out = "results.csv";
    std::string mode = "zt";
    std::string probe_on = "source";
    bool baselines = false;
    std::size_t jobs = 1;
    CommonOptions common;
};

int cmd_benchmark(const BenchmarkOptions& o) {
    const auto cfg = load_config(o.common);
    const auto subjects = parse_subjects(o.subjects);
    if (subjects.size() < 2) throw stc::UsageError("benchmark needs at least 2 subjects");
    if (o.probe_on != "source" && o.probe_on != "target") throw stc::UsageError("--probe-on must be source or target");
    const auto samples = stc::load_dataset(o.data, subjects, cfg.window, cfg.stride);
    require_subjects(samples, subjects);

    stc::BenchmarkConfig bc;
    bc.train = cfg.train;
    bc.probe = cfg.probe;
    bc.baseline = cfg.baseline;
    bc.baselines = o.baselines;
    bc.jobs = o.jobs;
    bc.probe_on_target = o.probe_on == "target";
    if (o.mode == "both") {
        bc.modes = {stc::ProbeMode::zt_only, stc::ProbeMode::zt_plus_zs};
    } else {
        bc.modes = {stc::probe_mode_from_string(o.mode)};
    }
    const auto matrix = stc::pairwise_benchmark(samples, subjects, bc);
    for (const auto& f : matrix.failures) std::cerr << "FAILED " << f << "\n";
    if (matrix.rows.empty()) throw stc::DataError("every benchmark pair failed");

    Metadata meta = stc::config_pairs(cfg);
    meta.emplace_back("subjects", o.subjects);
    meta.emplace_back("probe_on", o.probe_on);
    stc::report(matrix, o.out, meta);
    std::cout << stc::format_results_table(matrix);
    return matrix.failures.empty() ? kOk : kData;
}

struct SymbolizeOptions {
    std::string input;
    std::size_t n_symbols = 64;
    std::string stats;
    std::string out;
};

int cmd_symbolize(const SymbolizeOptions& o) {
    const auto samples = stc::read_windows_csv(fs::path(o.input));
    stc::ChannelStats stats;
    if (fs::exists(o.stats)) {
        stats = read_stats(o.stats);
    } else {
        stats = stc::fit_channel_stats(samples);
        write_stats(o.stats, stats);
    }
    const auto cuts = stc::make_cutlines(stats, o.n_symbols);

    std::ofstream file;
    if (!o.out.empty()) {
        file.open(o.out, std::ios::binary);
        if (!file) throw stc::DataError("cannot write " + o.out);
    }
    std::ostream& out = o.out.empty() ? std::cout : file;
    out << "# stc-symbols channels=" << stats.channels() << " n_symbols=" << o.n_symbols << "\n";
    out << "# stats=" << o.stats << "\n";
    for (const auto& s : samples) {
        const auto sv = stc::symbolize(s, cuts);
        out << s.subject_id << ',' << (s.label ? *s.label : -1);
        for (double v : sv.normalized) out << ',' << stc::format_double(v);
        out << '\n';
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stc: symbol-temporal consistency self-supervised learning for time series"};
    app.require_subcommand(1);

    SynthOptions synth;
    auto* c_synth = app.add_subcommand("synth", "generate a synthetic shifted-subject dataset");
    c_synth->add_option("--out", synth.out, "output directory (windows.csv is written there)")->required();
    c_synth->add_option("--subjects", synth.subjects, "number of subjects")->capture_default_str();
    c_synth->add_option("--seed", synth.seed, "random seed")->capture_default_str();
    c_synth->add_option("--channels", synth.synth.channels, "channels per window")->capture_default_str();
    c_synth->add_option("--length", synth.synth.length, "time steps per window")->capture_default_str();
    c_synth->add_option("--n-per-class", synth.synth.n_per_class, "windows per class and subject")
        ->capture_default_str();
    c_synth->add_option("--sample-rate", synth.synth.sample_rate, "sampling rate in Hz")->capture_default_str();

    PrepareOptions prep;
    auto* c_prep = app.add_subcommand("prepare", "window PAMAP2 protocol files into a windows.csv cache");
    c_prep->add_option("--pamap2", prep.pamap2, "directory with subject10X.dat files")->required();
    c_prep->add_option("--out", prep.out, "output directory")->required();
    c_prep->add_option("--subjects", prep.subjects, "comma-separated subject ids")->capture_default_str();
    add_config_options(c_prep, prep.common);

    PretrainOptions pre;
    auto* c_pre = app.add_subcommand("pretrain", "self-supervised pretraining on one source subject");
    c_pre->add_option("--data", pre.data, "data directory (windows.csv or PAMAP2 files)")->required();
    c_pre->add_option("--source", pre.source, "source subject id")->required();
    c_pre->add_option("--out", pre.out, "checkpoint path")->required();
    c_pre->add_option("--log", pre.log, "training log path (default <out>.log.csv)");
    add_config_options(c_pre, pre.common);

    ProbeOptions prb;
    auto* c_probe = app.add_subcommand("probe", "linear-probe accuracy of a checkpoint on a source/target pair");
    c_probe->add_option("--ckpt", prb.ckpt, "checkpoint path")->required();
    c_probe->add_option("--data", prb.data, "data directory")->required();
    c_probe->add_option("--source", prb.source, "source subject id")->required();
    c_probe->add_option("--target", prb.target, "target subject id")->required();
    c_probe->add_option("--mode", prb.mode, "zt or zt-zs")->capture_default_str();
    c_probe->add_option("--probe-on", prb.probe_on, "fit the probe on source or target windows")
        ->capture_default_str();
    add_config_options(c_probe, prb.common);

    BenchmarkOptions bench;
    auto* c_bench = app.add_subcommand("benchmark", "pairwise source->target benchmark over subjects");
    c_bench->add_option("--data", bench.data, "data directory")->required();
    c_bench->add_option("--subjects", bench.subjects, "comma-separated subject ids")->capture_default_str();
    c_bench->add_option("--out", bench.out, "results CSV path (a .txt table is written alongside)")
        ->capture_default_str();
    c_bench->add_option("--mode", bench.mode, "zt, zt-zs or both")->capture_default_str();
    c_bench->add_option("--probe-on", bench.probe_on, "fit the probe on source or target windows")
        ->capture_default_str();
    c_bench->add_flag("--baselines", bench.baselines, "also run the supervised MLP and LR baselines");
    c_bench->add_option("--jobs", bench.jobs, "parallel source subjects")->capture_default_str();
    add_config_options(c_bench, bench.common);

    SymbolizeOptions sym;
    auto* c_sym = app.add_subcommand("symbolize", "bag-of-symbols vectors for every window of a CSV");
    c_sym->add_option("--input", sym.input, "windows CSV")->required();
    c_sym->add_option("--n-symbols", sym.n_symbols, "number of symbols")->capture_default_str();
    c_sym->add_option("--stats", sym.stats, "channel stats file (read if present, else fitted and written)")
        ->required();
    c_sym->add_option("--out", sym.out, "output CSV (default stdout)");

    auto* c_defaults = app.add_subcommand("defaults", "print every config key with its default");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*c_synth) return cmd_synth(synth);
        if (*c_prep) return cmd_prepare(prep);
        if (*c_pre) return cmd_pretrain(pre);
        if (*c_probe) return cmd_probe(prb);
        if (*c_bench) return cmd_benchmark(bench);
        if (*c_sym) return cmd_symbolize(sym);
        if (*c_defaults) {
            std::cout << stc::format_config(stc::StcConfig{}, true);
            return kOk;
        }
    } catch (const stc::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const stc::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    }
    return kUsage;
}
