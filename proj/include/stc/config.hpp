#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stc/data.hpp"
#include "stc/error.hpp"
#include "stc/evaluate.hpp"
#include "stc/trainer.hpp"

namespace stc {

/// Every tunable setting of the pipeline.
struct StcConfig {
    TrainConfig train;
    std::size_t window = 256;
    std::size_t stride = 128;
    LogisticConfig probe;
    BaselineConfig baseline;
};

namespace config_detail {

inline std::string trim(std::string s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const auto t = trim(text);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
        throw UsageError("config key '" + key + "': cannot parse '" + text + "'");
    }
    return v;
}

inline std::vector<std::size_t> parse_list(const std::string& key, const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue;
        out.push_back(parse_number<std::size_t>(key, item));
    }
    return out;
}

inline std::string format_list(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

inline std::string fmt(double v) { return format_double(v); }

}  // namespace config_detail

struct ConfigField {
    std::string key;
    std::string doc;
    std::function<std::string(const StcConfig&)> get;
    std::function<void(StcConfig&, const std::string&)> set;
};

/// The documented settings, in echo order.
inline const std::vector<ConfigField>& config_fields() {
    using namespace config_detail;
#define STC_REAL(KEY, DOC, MEMBER)                                                        \
    ConfigField{KEY, DOC, [](const StcConfig& c) { return fmt(c.MEMBER); },               \
                [](StcConfig& c, const std::string& v) { c.MEMBER = parse_number<double>(KEY, v); }}
#define STC_SIZE(KEY, DOC, MEMBER)                                                        \
    ConfigField{KEY, DOC, [](const StcConfig& c) { return std::to_string(c.MEMBER); },    \
                [](StcConfig& c, const std::string& v) { c.MEMBER = parse_number<std::size_t>(KEY, v); }}
#define STC_U64(KEY, DOC, MEMBER)                                                         \
    ConfigField{KEY, DOC, [](const StcConfig& c) { return std::to_string(c.MEMBER); },    \
                [](StcConfig& c, const std::string& v) { c.MEMBER = parse_number<std::uint64_t>(KEY, v); }}
#define STC_LIST(KEY, DOC, MEMBER)                                                        \
    ConfigField{KEY, DOC, [](const StcConfig& c) { return format_list(c.MEMBER); },       \
                [](StcConfig& c, const std::string& v) { c.MEMBER = parse_list(KEY, v); }}

    static const std::vector<ConfigField> fields{
        STC_SIZE("symbolize.n_symbols", "number of symbols (n-1 cutlines)", train.n_symbols),
        STC_SIZE("data.window", "window length L in time steps", window),
        STC_SIZE("data.stride", "window stride in time steps", stride),
        STC_SIZE("model.h_dim", "encoder output width", train.h_dim),
        STC_SIZE("model.z_dim", "projector output width", train.z_dim),
        STC_LIST("model.hidden", "encoder hidden layer widths", train.encoder_hidden),
        STC_LIST("model.proj_hidden", "projector hidden layer widths", train.projector_hidden),
        STC_REAL("loss.tau", "contrastive temperature", train.loss.tau),
        STC_REAL("loss.delta", "consistency margin", train.loss.delta),
        STC_REAL("loss.lambda", "consistency weight", train.loss.lambda),
        ConfigField{"loss.denominator_mode", "simclr_standard or negatives_only",
                    [](const StcConfig& c) { return std::string(to_string(c.train.loss.mode)); },
                    [](StcConfig& c, const std::string& v) { c.train.loss.mode = denominator_mode_from_string(trim(v)); }},
        STC_REAL("augment.jitter_sigma", "time-view noise std, fraction of channel sigma", train.augment.jitter_sigma),
        STC_REAL("augment.symbol_edit_rate", "symbol-view edits, fraction of count mass", train.augment.symbol_edit_rate),
        STC_U64("augment.seed", "augmentation random seed", train.augment.seed),
        STC_SIZE("train.epochs", "pretraining epochs", train.epochs),
        STC_SIZE("train.batch_size", "pretraining batch size", train.batch_size),
        STC_REAL("train.lr", "Adam learning rate", train.lr),
        STC_U64("train.seed", "initialization and shuffling seed", train.seed),
        STC_REAL("scheduler.factor", "plateau lr reduction factor", train.scheduler.factor),
        STC_SIZE("scheduler.patience", "plateau patience in epochs", train.scheduler.patience),
        STC_REAL("scheduler.min_lr", "learning-rate floor", train.scheduler.min_lr),
        STC_SIZE("probe.epochs", "logistic-regression epochs", probe.epochs),
        STC_REAL("probe.lr", "logistic-regression Adam learning rate", probe.lr),
        STC_REAL("probe.reg", "logistic-regression L2 penalty", probe.reg),
        STC_SIZE("baseline.epochs", "MLP baseline epochs", baseline.epochs),
        STC_SIZE("baseline.batch_size", "MLP baseline batch size", baseline.batch_size),
        STC_REAL("baseline.lr", "MLP baseline Adam learning rate", baseline.lr),
        STC_LIST("baseline.hidden", "MLP baseline hidden layer widths", baseline.hidden),
        STC_U64("baseline.seed", "MLP baseline seed", baseline.seed),
    };
#undef STC_REAL
#undef STC_SIZE
#undef STC_U64
#undef STC_LIST
    return fields;
}

/// Sets one dotted key; unknown keys are usage errors.
inline void set_config_value(StcConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& f : config_fields()) {
        if (f.key == key) {
            f.set(cfg, value);
            return;
        }
    }
    throw UsageError("unknown config key '" + key + "'");
}

/// Parses `key = value` lines; '#' starts a comment.
inline void apply_config(StcConfig& cfg, std::istream& in, const std::string& name = "config") {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = config_detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(name + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        set_config_value(cfg, config_detail::trim(line.substr(0, eq)), config_detail::trim(line.substr(eq + 1)));
    }
}

inline void apply_config_file(StcConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path.string());
    apply_config(cfg, in, path.string());
}

/// Effective settings as ordered key/value pairs, for echoing into outputs.
inline std::vector<std::pair<std::string, std::string>> config_pairs(const StcConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& f : config_fields()) out.emplace_back(f.key, f.get(cfg));
    return out;
}

inline std::string format_config(const StcConfig& cfg, bool with_docs = false) {
    std::string out;
    for (const auto& f : config_fields()) {
        if (with_docs) out += "# " + f.doc + "\n";
        out += f.key + " = " + f.get(cfg) + "\n";
    }
    return out;
}

}  // namespace stc
