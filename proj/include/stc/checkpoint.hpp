#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stc/error.hpp"
#include "stc/model.hpp"

namespace stc {

// Checkpoint layout:
//   "STC1"
//   u32 header length, then that many bytes of UTF-8 JSON
//   u32 blob count, then per blob: u32 name length, name, u32 rows, u32 cols,
//   rows*cols little-endian f64
// Blobs: stats.mean, stats.sigma, then StcModel::parameters() in order.

inline constexpr std::array<char, 4> kCheckpointMagic{'S', 'T', 'C', '1'};

struct Checkpoint {
    StcModel model;
    nlohmann::json header;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_f64(std::string& out, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

class ByteReader {
public:
    explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return std::bit_cast<double>(v);
    }

    std::string take(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    [[nodiscard]] bool at_end() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw DataError("checkpoint truncated at byte " + std::to_string(pos_));
    }
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

inline nlohmann::json architecture_json(const StcModel& m) {
    return {{"channels", m.dims.channels},
            {"length", m.dims.length},
            {"n_symbols", m.dims.n_symbols},
            {"h_dim", m.dims.h_dim},
            {"z_dim", m.dims.z_dim},
            {"encoder_hidden", m.dims.encoder_hidden},
            {"projector_hidden", m.dims.projector_hidden}};
}

}  // namespace detail

/// Serializes model + header. `config` is echoed verbatim into the header.
inline std::string encode_checkpoint(const StcModel& model, const std::vector<std::pair<std::string, std::string>>& config,
                                     std::uint64_t seed) {
    nlohmann::json header;
    header["format"] = "stc-checkpoint";
    header["version"] = 1;
    header["architecture"] = detail::architecture_json(model);
    header["seed"] = seed;
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : config) cfg[k] = v;
    header["config"] = cfg;
    const std::string header_text = header.dump();

    StcModel copy = model;
    std::vector<std::pair<std::string, const Matrix*>> blobs;
    const Matrix mean(1, copy.stats.mean.size(), copy.stats.mean);
    const Matrix sigma(1, copy.stats.sigma.size(), copy.stats.sigma);
    blobs.emplace_back("stats.mean", &mean);
    blobs.emplace_back("stats.sigma", &sigma);
    for (const auto& p : copy.parameters()) blobs.emplace_back(p.name, p.value);

    std::string out(kCheckpointMagic.begin(), kCheckpointMagic.end());
    detail::put_u32(out, static_cast<std::uint32_t>(header_text.size()));
    out += header_text;
    detail::put_u32(out, static_cast<std::uint32_t>(blobs.size()));
    for (const auto& [name, m] : blobs) {
        detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        detail::put_u32(out, static_cast<std::uint32_t>(m->rows()));
        detail::put_u32(out, static_cast<std::uint32_t>(m->cols()));
        for (double v : m->values()) detail::put_f64(out, v);
    }
    return out;
}

inline Checkpoint decode_checkpoint(const std::string& bytes) {
    if (bytes.size() < 4 || !std::equal(kCheckpointMagic.begin(), kCheckpointMagic.end(), bytes.begin())) {
        throw DataError("not an STC checkpoint");
    }
    detail::ByteReader in(bytes);
    in.take(4);
    Checkpoint ck;
    const std::uint32_t header_len = in.u32();
    try {
        ck.header = nlohmann::json::parse(in.take(header_len));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint header is not valid JSON: ") + e.what());
    }

    ModelDims dims;
    try {
        const auto& a = ck.header.at("architecture");
        dims.channels = a.at("channels").get<std::size_t>();
        dims.length = a.at("length").get<std::size_t>();
        dims.n_symbols = a.at("n_symbols").get<std::size_t>();
        dims.h_dim = a.at("h_dim").get<std::size_t>();
        dims.z_dim = a.at("z_dim").get<std::size_t>();
        dims.encoder_hidden = a.at("encoder_hidden").get<std::vector<std::size_t>>();
        dims.projector_hidden = a.at("projector_hidden").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint header lacks architecture: ") + e.what());
    }

    // Build a skeleton with the declared shapes, then overwrite every blob.
    ChannelStats stats{std::vector<double>(dims.channels, 0.0), std::vector<double>(dims.channels, 1.0)};
    ck.model = StcModel::create(dims, stats, 0);
    std::vector<std::pair<std::string, Matrix*>> targets;
    Matrix mean(1, dims.channels), sigma(1, dims.channels);
    targets.emplace_back("stats.mean", &mean);
    targets.emplace_back("stats.sigma", &sigma);
    for (const auto& p : ck.model.parameters()) targets.emplace_back(p.name, p.value);

    const std::uint32_t count = in.u32();
    if (count != targets.size()) {
        throw DataError("checkpoint dimension mismatch: " + std::to_string(count) + " blobs, architecture needs " +
                        std::to_string(targets.size()));
    }
    for (const auto& [name, m] : targets) {
        const std::string got = in.take(in.u32());
        if (got != name) throw DataError("checkpoint blob '" + got + "' found where '" + name + "' was expected");
        const std::uint32_t rows = in.u32();
        const std::uint32_t cols = in.u32();
        if (rows != m->rows() || cols != m->cols()) {
            throw DataError("checkpoint dimension mismatch for " + name + ": " + std::to_string(rows) + "x" +
                            std::to_string(cols) + " vs " + m->shape_string());
        }
        for (double& v : m->values()) v = in.f64();
    }
    if (!in.at_end()) throw DataError("checkpoint has trailing bytes");
    ck.model.stats.mean.assign(mean.values().begin(), mean.values().end());
    ck.model.stats.sigma.assign(sigma.values().begin(), sigma.values().end());
    return ck;
}

inline void save_checkpoint(const StcModel& model, const std::vector<std::pair<std::string, std::string>>& config,
                            std::uint64_t seed, const std::filesystem::path& path) {
    const std::string bytes = encode_checkpoint(model, config, seed);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for checkpoint " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace stc
