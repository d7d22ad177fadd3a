#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stc/error.hpp"
#include "stc/random.hpp"
#include "stc/sample.hpp"

namespace stc {

// ---------------------------------------------------------------------------
// PAMAP2

namespace pamap2 {

inline constexpr std::size_t kColumns = 54;
inline constexpr std::size_t kActivityColumn = 1;
inline constexpr double kSampleRateHz = 100.0;
/// 3-axis +-16g accelerometer of the hand, chest and ankle IMUs. Each IMU
/// block is 17 columns starting at 3, 20 and 37; the 16g triple is at offset 1.
inline constexpr std::array<std::size_t, 9> kAccelColumns{4, 5, 6, 21, 22, 23, 38, 39, 40};

/// PAMAP2 activity id -> class label (standing 0, walking 1, running 2).
inline std::optional<int> label_for_activity(int activity) {
    switch (activity) {
        case 3: return 0;
        case 4: return 1;
        case 5: return 2;
        default: return std::nullopt;
    }
}

inline std::string file_name(int subject) { return "subject" + std::to_string(100 + subject) + ".dat"; }

}  // namespace pamap2

/// One contiguous run of a single activity: channels x time steps.
struct ActivitySegment {
    int label = 0;
    Matrix values;
};

struct SubjectStream {
    int subject_id = 0;
    std::vector<ActivitySegment> segments;

    /// Time steps recorded per label.
    [[nodiscard]] std::map<int, std::size_t> steps_per_label() const {
        std::map<int, std::size_t> out;
        for (const auto& s : segments) out[s.label] += s.values.cols();
        return out;
    }
};

namespace detail {

/// Fills interior NaNs of one channel by linear interpolation between the
/// nearest finite neighbours. Returns false if the channel has no finite value.
inline bool interpolate_gaps(std::span<double> x) {
    std::size_t first = 0;
    while (first < x.size() && std::isnan(x[first])) ++first;
    if (first == x.size()) return false;
    std::size_t prev = first;
    for (std::size_t t = first + 1; t < x.size(); ++t) {
        if (std::isnan(x[t])) continue;
        if (t > prev + 1) {
            const double span = static_cast<double>(t - prev);
            for (std::size_t u = prev + 1; u < t; ++u) {
                const double f = static_cast<double>(u - prev) / span;
                x[u] = x[prev] + f * (x[t] - x[prev]);
            }
        }
        prev = t;
    }
    return true;
}

/// Drops rows at either end where any channel is NaN, then interpolates the rest.
inline std::optional<ActivitySegment> finish_segment(int label, const std::vector<std::array<double, 9>>& rows) {
    std::size_t begin = 0, end = rows.size();
    auto complete = [](const std::array<double, 9>& r) {
        return std::none_of(r.begin(), r.end(), [](double v) { return std::isnan(v); });
    };
    while (begin < end && !complete(rows[begin])) ++begin;
    while (end > begin && !complete(rows[end - 1])) --end;
    if (begin == end) return std::nullopt;
    ActivitySegment seg{label, Matrix(9, end - begin)};
    for (std::size_t t = begin; t < end; ++t) {
        for (std::size_t k = 0; k < 9; ++k) seg.values(k, t - begin) = rows[t][k];
    }
    for (std::size_t k = 0; k < 9; ++k) interpolate_gaps(seg.values.row(k));
    return seg;
}

inline double parse_double(std::string_view tok, std::size_t line_no, const std::string& file) {
    if (tok == "NaN" || tok == "nan" || tok == "NAN") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw DataError(file + ": malformed value '" + std::string(tok) + "' at line " +
                        std::to_string(line_no));
    }
    return v;
}

}  // namespace detail

/// Parses one PAMAP2 protocol file into standing/walking/running segments of
/// the nine +-16g accelerometer channels.
inline SubjectStream parse_pamap2(std::istream& in, int subject, const std::string& name) {
    SubjectStream stream{subject, {}};
    std::vector<std::array<double, 9>> rows;
    int current = -1;
    auto flush = [&] {
        if (current >= 0 && !rows.empty()) {
            if (auto seg = detail::finish_segment(current, rows)) stream.segments.push_back(std::move(*seg));
        }
        rows.clear();
    };

    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string_view> tokens;
    while (std::getline(in, line)) {
        ++line_no;
        tokens.clear();
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
            const std::size_t start = i;
            while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
            if (i > start) tokens.emplace_back(line.data() + start, i - start);
        }
        if (tokens.empty()) continue;
        if (tokens.size() != pamap2::kColumns) {
            throw DataError(name + ": expected " + std::to_string(pamap2::kColumns) + " columns, got " +
                            std::to_string(tokens.size()) + " at line " + std::to_string(line_no));
        }
        const double act = detail::parse_double(tokens[pamap2::kActivityColumn], line_no, name);
        if (std::isnan(act)) throw DataError(name + ": missing activity id at line " + std::to_string(line_no));
        const auto label = pamap2::label_for_activity(static_cast<int>(act));
        const int code = label ? *label : -1;
        if (code != current) {
            flush();
            current = code;
        }
        if (!label) continue;
        std::array<double, 9> r{};
        for (std::size_t k = 0; k < 9; ++k) {
            r[k] = detail::parse_double(tokens[pamap2::kAccelColumns[k]], line_no, name);
        }
        rows.push_back(r);
    }
    flush();
    return stream;
}

/// Locates subject10X.dat in dir or dir/Protocol.
inline std::filesystem::path pamap2_path(const std::filesystem::path& dir, int subject) {
    const auto name = pamap2::file_name(subject);
    for (const auto& p : {dir / name, dir / "Protocol" / name}) {
        if (std::filesystem::exists(p)) return p;
    }
    throw DataError("PAMAP2 file for subject " + std::to_string(subject) + " not found under " + dir.string());
}

inline std::vector<SubjectStream> load_pamap2(const std::filesystem::path& dir, std::span<const int> subjects) {
    std::vector<SubjectStream> out;
    for (int s : subjects) {
        const auto path = pamap2_path(dir, s);
        std::ifstream in(path);
        if (!in) throw DataError("cannot open " + path.string());
        out.push_back(parse_pamap2(in, s, path.filename().string()));
    }
    return out;
}

/// Subjects with at least `min_seconds` of each of the three activities.
inline std::vector<int> qualifying_subjects(std::span<const SubjectStream> streams, double min_seconds = 90.0,
                                            double sample_rate = pamap2::kSampleRateHz) {
    std::vector<int> out;
    const auto needed = static_cast<std::size_t>(std::ceil(min_seconds * sample_rate));
    for (const auto& s : streams) {
        const auto steps = s.steps_per_label();
        bool ok = true;
        for (int c = 0; c < kNumClasses; ++c) {
            const auto it = steps.find(c);
            ok = ok && it != steps.end() && it->second >= needed;
        }
        if (ok) out.push_back(s.subject_id);
    }
    return out;
}

/// Number of windows of length L with the given stride in a run of T steps.
inline std::size_t window_count(std::size_t steps, std::size_t length, std::size_t stride) {
    return steps < length ? 0 : (steps - length) / stride + 1;
}

/// Cuts one segment into labeled windows; windows never cross segment ends.
inline std::vector<TimeSeriesSample> window(const ActivitySegment& seg, int subject, std::size_t length,
                                            std::size_t stride) {
    if (length == 0 || stride == 0) throw UsageError("window: length and stride must be positive");
    std::vector<TimeSeriesSample> out;
    const std::size_t count = window_count(seg.values.cols(), length, stride);
    out.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        TimeSeriesSample s{Matrix(seg.values.rows(), length), subject, seg.label};
        for (std::size_t k = 0; k < seg.values.rows(); ++k) {
            const auto src = seg.values.row(k);
            std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(w * stride), length, s.values.row(k).begin());
        }
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<TimeSeriesSample> window(const SubjectStream& stream, std::size_t length, std::size_t stride) {
    std::vector<TimeSeriesSample> out;
    for (const auto& seg : stream.segments) {
        auto w = window(seg, stream.subject_id, length, stride);
        out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splits

struct DatasetSplit {
    std::vector<TimeSeriesSample> pretrain;     // source windows, labels removed
    std::vector<TimeSeriesSample> probe_train;  // labeled windows the probe is fitted on
    std::vector<TimeSeriesSample> test;         // labeled windows the probe is scored on
};

inline std::vector<TimeSeriesSample> subject_samples(std::span<const TimeSeriesSample> samples, int subject) {
    std::vector<TimeSeriesSample> out;
    for (const auto& s : samples) {
        if (s.subject_id == subject) out.push_back(s);
    }
    return out;
}

inline void require_all_classes(std::span<const TimeSeriesSample> samples, int subject) {
    std::set<int> seen;
    for (const auto& s : samples) {
        if (s.label) seen.insert(*s.label);
    }
    for (int c = 0; c < kNumClasses; ++c) {
        if (!seen.contains(c)) {
            throw DataError("subject " + std::to_string(subject) + " has no windows of class " + std::to_string(c));
        }
    }
}

/// Pretrain and probe on the source subject, test on the target subject.
inline DatasetSplit make_split(std::span<const TimeSeriesSample> samples, int source, int target) {
    if (source == target) throw UsageError("make_split: source and target subject must differ");
    DatasetSplit split;
    split.probe_train = subject_samples(samples, source);
    split.test = subject_samples(samples, target);
    require_all_classes(split.probe_train, source);
    require_all_classes(split.test, target);
    split.pretrain = split.probe_train;
    for (auto& s : split.pretrain) s.label.reset();
    return split;
}

/// Probe fitted and scored within the target subject: per class, the first
/// half of its windows (in stored order) trains the probe and the rest tests it.
/// Pretraining still uses the source subject.
inline DatasetSplit make_target_probe_split(std::span<const TimeSeriesSample> samples, int source, int target) {
    DatasetSplit base = make_split(samples, source, target);
    DatasetSplit split;
    split.pretrain = std::move(base.pretrain);
    for (int c = 0; c < kNumClasses; ++c) {
        std::vector<const TimeSeriesSample*> cls;
        for (const auto& s : base.test) {
            if (s.label == c) cls.push_back(&s);
        }
        const std::size_t half = (cls.size() + 1) / 2;
        for (std::size_t i = 0; i < cls.size(); ++i) (i < half ? split.probe_train : split.test).push_back(*cls[i]);
    }
    if (split.test.empty()) throw DataError("target subject has too few windows for a target-side probe");
    return split;
}

// ---------------------------------------------------------------------------
// Synthetic shifted-subject data

/// Per-subject distortion of the class templates.
struct SynthSpec {
    double shift = 0.0;         // additive offset on every channel
    double warp = 1.0;          // frequency scaling of the periodic classes
    double noise_std = 0.1;     // additive Gaussian noise
    double amplitude = 1.0;     // scaling of the motion component
    double phase_jitter = 1.0;  // random start phase, as a fraction of a full cycle
};

struct SynthConfig {
    std::size_t channels = 3;
    std::size_t length = 128;
    std::size_t n_per_class = 40;
    double sample_rate = 50.0;
    std::uint64_t seed = 0;
};

/// Class templates per channel k (motion amplitude a_k, static offset g_k):
/// standing is the offset alone, walking a 1.5 Hz sinusoid, running a 3 Hz
/// sinusoid at twice the amplitude.
inline double synth_template(int label, std::size_t channel, std::size_t channels, double t_seconds,
                             double warp, double phase) {
    const double offset = channel == 0 ? 1.0 : 0.0;
    const double amp = 1.0 / (1.0 + 0.25 * static_cast<double>(channel));
    const double channel_phase = 2.0 * std::numbers::pi * static_cast<double>(channel) / static_cast<double>(channels);
    switch (label) {
        case 0: return offset;
        case 1: return offset + amp * std::sin(2.0 * std::numbers::pi * 1.5 * warp * t_seconds + channel_phase + phase);
        case 2: return offset + 2.0 * amp * std::sin(2.0 * std::numbers::pi * 3.0 * warp * t_seconds + channel_phase + phase);
        default: throw UsageError("synth_template: unknown label " + std::to_string(label));
    }
}

/// Labeled samples for each (subject, spec), n_per_class per class. Each
/// subject draws from its own stream of the seed, so subjects are independent
/// of each other and of their order.
inline std::vector<TimeSeriesSample> synth_generate(const std::map<int, SynthSpec>& specs, const SynthConfig& cfg) {
    if (specs.size() < 2) throw UsageError("synth_generate: need at least 2 subjects");
    if (cfg.channels == 0 || cfg.length == 0 || cfg.n_per_class == 0) {
        throw UsageError("synth_generate: channels, length and n_per_class must be positive");
    }
    std::vector<TimeSeriesSample> out;
    const Rng root(cfg.seed);
    for (const auto& [subject, spec] : specs) {
        if (!(spec.warp > 0.0)) throw UsageError("synth_generate: warp must be > 0");
        Rng rng = root.split(static_cast<std::uint64_t>(subject));
        for (int label = 0; label < kNumClasses; ++label) {
            for (std::size_t n = 0; n < cfg.n_per_class; ++n) {
                TimeSeriesSample s{Matrix(cfg.channels, cfg.length), subject, label};
                const double phase = spec.phase_jitter * rng.uniform(0.0, 2.0 * std::numbers::pi);
                for (std::size_t k = 0; k < cfg.channels; ++k) {
                    const double offset = k == 0 ? 1.0 : 0.0;
                    for (std::size_t t = 0; t < cfg.length; ++t) {
                        const double ts = static_cast<double>(t) / cfg.sample_rate;
                        const double base = synth_template(label, k, cfg.channels, ts, spec.warp, phase);
                        double v = offset + spec.amplitude * (base - offset) + spec.shift;
                        if (spec.noise_std > 0.0) v += spec.noise_std * rng.normal();
                        s.values(k, t) = v;
                    }
                }
                out.push_back(std::move(s));
            }
        }
    }
    return out;
}

/// Subject 1 is the undistorted reference; subjects 2..n get random
/// shift, warp, noise and amplitude within moderate ranges.
inline std::map<int, SynthSpec> synth_subject_specs(std::size_t n_subjects, std::uint64_t seed) {
    std::map<int, SynthSpec> specs;
    Rng rng = Rng(seed).split(0xC0FFEE);
    for (std::size_t i = 1; i <= n_subjects; ++i) {
        SynthSpec s;
        if (i > 1) {
            s.shift = rng.uniform(-0.3, 0.3);
            s.warp = rng.uniform(0.85, 1.15);
            s.noise_std = rng.uniform(0.05, 0.3);
            s.amplitude = rng.uniform(0.8, 1.25);
        }
        specs[static_cast<int>(i)] = s;
    }
    return specs;
}

// ---------------------------------------------------------------------------
// Window cache CSV: "# stc-windows channels=K length=L", optional "# key=value"
// metadata lines, then one row per window: subject,label,K*L values
// (channel-major). Unlabeled windows carry label -1.

inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline void write_windows_csv(std::ostream& out, std::span<const TimeSeriesSample> samples,
                              const std::vector<std::pair<std::string, std::string>>& metadata = {}) {
    if (samples.empty()) throw UsageError("write_windows_csv: no samples");
    const std::size_t k = samples.front().channels();
    const std::size_t l = samples.front().length();
    out << "# stc-windows channels=" << k << " length=" << l << "\n";
    for (const auto& [key, value] : metadata) out << "# " << key << "=" << value << "\n";
    for (const auto& s : samples) {
        if (s.channels() != k || s.length() != l) throw DataError("write_windows_csv: ragged samples");
        out << s.subject_id << ',' << (s.label ? *s.label : -1);
        for (double v : s.values.values()) out << ',' << format_double(v);
        out << '\n';
    }
}

inline void write_windows_csv(const std::filesystem::path& path, std::span<const TimeSeriesSample> samples,
                              const std::vector<std::pair<std::string, std::string>>& metadata = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_windows_csv(out, samples, metadata);
    if (!out) throw DataError("write failed for " + path.string());
}

inline std::vector<TimeSeriesSample> read_windows_csv(std::istream& in, const std::string& name = "windows.csv") {
    std::string line;
    std::size_t line_no = 0;
    std::size_t k = 0, l = 0;
    std::vector<TimeSeriesSample> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (line.rfind("# stc-windows", 0) == 0) {
                std::istringstream hs(line.substr(13));
                std::string field;
                while (hs >> field) {
                    if (field.rfind("channels=", 0) == 0) k = std::stoul(field.substr(9));
                    if (field.rfind("length=", 0) == 0) l = std::stoul(field.substr(7));
                }
            }
            continue;
        }
        if (k == 0 || l == 0) throw DataError(name + ": missing '# stc-windows' header before line " + std::to_string(line_no));
        std::vector<std::string_view> cells;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                cells.emplace_back(line.data() + start, i - start);
                start = i + 1;
            }
        }
        if (cells.size() != 2 + k * l) {
            throw DataError(name + ": expected " + std::to_string(2 + k * l) + " fields, got " +
                            std::to_string(cells.size()) + " at line " + std::to_string(line_no));
        }
        TimeSeriesSample s{Matrix(k, l), 0, std::nullopt};
        s.subject_id = static_cast<int>(detail::parse_double(cells[0], line_no, name));
        const int label = static_cast<int>(detail::parse_double(cells[1], line_no, name));
        if (label >= 0) s.label = label;
        auto values = s.values.values();
        for (std::size_t i = 0; i < k * l; ++i) {
            values[i] = detail::parse_double(cells[2 + i], line_no, name);
            if (!std::isfinite(values[i])) {
                throw DataError(name + ": non-finite value at line " + std::to_string(line_no));
            }
        }
        out.push_back(std::move(s));
    }
    if (out.empty()) throw DataError(name + ": no windows");
    return out;
}

inline std::vector<TimeSeriesSample> read_windows_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return read_windows_csv(in, path.filename().string());
}

inline constexpr const char* kWindowsFile = "windows.csv";

/// Windows for a data directory: the window cache if present, otherwise
/// PAMAP2 protocol files for the requested subjects.
inline std::vector<TimeSeriesSample> load_dataset(const std::filesystem::path& dir, std::span<const int> subjects,
                                                  std::size_t length, std::size_t stride) {
    if (!std::filesystem::is_directory(dir)) throw DataError("data directory not found: " + dir.string());
    const auto cache = dir / kWindowsFile;
    if (std::filesystem::exists(cache)) return read_windows_csv(cache);
    std::vector<TimeSeriesSample> out;
    for (const auto& stream : load_pamap2(dir, subjects)) {
        auto w = window(stream, length, stride);
        out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
    }
    return out;
}

}  // namespace stc
