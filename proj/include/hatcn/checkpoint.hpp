#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "hatcn/errors.hpp"
#include "hatcn/model.hpp"

// Versioned binary checkpoint: magic, header, config, every parameter grid,
// then an FNV-1a checksum. All integers and doubles are packed little-endian
// byte by byte, so files travel across hosts.

namespace hatcn {

namespace ckpt {

inline constexpr char kMagic[8] = {'H', 'A', 'T', 'C', 'N', 'B', 'I', 'N'};
inline constexpr std::uint32_t kVersion = 1;

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

// Bounds-checked cursor over the raw file bytes; every short read is a
// corruption signal, not UB.
struct Reader {
    const std::string& bytes;
    std::size_t pos = 0;
    const std::string& path;

    void need(std::size_t n) const {
        if (pos + n > bytes.size())
            throw DataError("checkpoint " + path + ": truncated file");
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
};

inline std::uint64_t fnv1a(const char* data, std::size_t n) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace ckpt

struct Checkpoint {
    ModelConfig config;
    Variant variant = Variant::hatcn;
    std::uint64_t seed = 0;    // training seed the model came from
    std::uint64_t epochs = 0;  // how long it was trained
    Model model;
};

inline std::string encode_checkpoint(const Model& model, Variant variant,
                                     std::uint64_t seed, std::uint64_t epochs) {
    using namespace ckpt;
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, kVersion);
    put_u32(out, variant == Variant::hatcn ? 0u : 1u);
    put_u64(out, seed);
    put_u64(out, epochs);

    const auto& cfg = model.config();
    put_u64(out, cfg.layers);
    put_u64(out, cfg.channels);
    put_u64(out, cfg.kernel);
    put_u64(out, cfg.input_length);
    put_u32(out, cfg.dilation_overridden ? 1u : 0u);
    put_u64(out, cfg.dilations.size());
    for (std::size_t d : cfg.dilations) put_u64(out, d);

    // Full parameter set in the model's canonical order, attention included
    // even for tcn checkpoints so variants stay interchangeable on disk.
    auto params = model.all_parameters();
    put_u64(out, params.size());
    for (const auto& p : params) {
        put_u64(out, p->value.rows());
        put_u64(out, p->value.cols());
        for (std::size_t i = 0; i < p->value.size(); ++i) put_f64(out, p->value[i]);
    }
    put_u64(out, fnv1a(out.data(), out.size()));
    return out;
}

inline void save_checkpoint(const std::string& path, const Model& model, Variant variant,
                            std::uint64_t seed, std::uint64_t epochs) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("checkpoint " + path + ": cannot open for writing");
    const auto bytes = encode_checkpoint(model, variant, seed, epochs);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError("checkpoint " + path + ": write failed");
}

inline Checkpoint decode_checkpoint(const std::string& bytes, const std::string& path) {
    using namespace ckpt;
    Reader r{bytes, 0, path};
    r.need(sizeof(kMagic));
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw DataError("checkpoint " + path + ": bad magic, not a checkpoint file");
    r.pos = sizeof(kMagic);
    const auto version = r.u32();
    if (version != kVersion)
        throw DataError("checkpoint " + path + ": unsupported version " +
                        std::to_string(version));
    Checkpoint c;
    const auto variant_tag = r.u32();
    if (variant_tag > 1)
        throw DataError("checkpoint " + path + ": unknown model variant tag");
    c.variant = variant_tag == 0 ? Variant::hatcn : Variant::tcn;
    c.seed = r.u64();
    c.epochs = r.u64();

    c.config.layers = r.u64();
    c.config.channels = r.u64();
    c.config.kernel = r.u64();
    c.config.input_length = r.u64();
    c.config.dilation_overridden = r.u32() != 0;
    const auto n_dilations = r.u64();
    if (n_dilations > 64) throw DataError("checkpoint " + path + ": implausible dilation count");
    c.config.dilations.resize(n_dilations);
    for (auto& d : c.config.dilations) d = r.u64();
    try {
        c.config.validate();
    } catch (const ConfigError& e) {
        throw DataError("checkpoint " + path + ": invalid config: " + e.what());
    }

    c.model = Model::init(c.config, 0);
    auto params = c.model.all_parameters();
    const auto n_params = r.u64();
    if (n_params != params.size())
        throw DataError("checkpoint " + path + ": parameter count mismatch");
    for (auto& p : params) {
        const auto rows = r.u64();
        const auto cols = r.u64();
        if (rows != p->value.rows() || cols != p->value.cols())
            throw DataError("checkpoint " + path + ": parameter shape mismatch");
        for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] = r.f64();
    }
    const std::size_t body = r.pos;
    const auto stored = r.u64();
    if (stored != fnv1a(bytes.data(), body))
        throw DataError("checkpoint " + path + ": checksum mismatch, file corrupted");
    if (r.pos != bytes.size())
        throw DataError("checkpoint " + path + ": trailing bytes after checksum");
    return c;
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("checkpoint " + path + ": cannot open");
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes, path);
}

}  // namespace hatcn
