#include "camse/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "camse/errors.hpp"

namespace camse {

namespace {

constexpr char kMagic[8] = {'C', 'A', 'M', 'S', 'E', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void write_le(std::ofstream& out, T v) {
    std::uint8_t buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
    }
    write_bytes(out, buf, sizeof(T));
}

struct Reader {
    std::vector<std::uint8_t> bytes;
    std::size_t pos = 0;
    std::string where;

    void need(std::size_t n) const {
        if (bytes.size() - pos < n) throw ParseError(where + ": truncated checkpoint");
    }
    template <typename T>
    T get_le() {
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
        }
        pos += sizeof(T);
        return static_cast<T>(v);
    }
    std::string get_string(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
        pos += n;
        return s;
    }
};

}  // namespace

void save_checkpoint(const std::string& path, const std::string& config_json,
                     const ParamStore& params, CheckpointDtype dtype) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    write_bytes(out, kMagic, sizeof(kMagic));
    write_le<std::uint32_t>(out, kVersion);
    write_le<std::uint64_t>(out, config_json.size());
    write_bytes(out, config_json.data(), config_json.size());
    write_le<std::uint64_t>(out, params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string& name = params.name(i);
        const Tensor& t = params.at(i).value();
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        write_bytes(out, name.data(), name.size());
        write_le<std::uint8_t>(out, dtype == CheckpointDtype::f32 ? 0 : 1);
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.ndim()));
        for (std::size_t d = 0; d < t.ndim(); ++d) write_le<std::uint64_t>(out, t.dim(d));
        if (dtype == CheckpointDtype::f32) {
            for (std::size_t j = 0; j < t.size(); ++j) {
                const float f = static_cast<float>(t[j]);
                std::uint32_t u;
                std::memcpy(&u, &f, sizeof(u));
                write_le<std::uint32_t>(out, u);
            }
        } else {
            for (std::size_t j = 0; j < t.size(); ++j) {
                const double d = t[j];
                std::uint64_t u;
                std::memcpy(&u, &d, sizeof(u));
                write_le<std::uint64_t>(out, u);
            }
        }
    }
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    Reader r;
    r.bytes.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    r.where = path;
    r.need(sizeof(kMagic));
    if (std::memcmp(r.bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw ParseError(path + ": not a checkpoint file (bad magic)");
    }
    r.pos = sizeof(kMagic);
    const auto version = r.get_le<std::uint32_t>();
    if (version != kVersion) {
        throw ParseError(path + ": unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ckpt;
    const auto config_len = r.get_le<std::uint64_t>();
    ckpt.config_json = r.get_string(config_len);
    const auto n_params = r.get_le<std::uint64_t>();
    for (std::uint64_t p = 0; p < n_params; ++p) {
        const auto name_len = r.get_le<std::uint32_t>();
        std::string name = r.get_string(name_len);
        const auto dtype = r.get_le<std::uint8_t>();
        if (dtype > 1) throw ParseError(path + ": unknown dtype for parameter " + name);
        const auto ndim = r.get_le<std::uint32_t>();
        std::vector<std::size_t> shape(ndim);
        std::size_t total = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            shape[d] = static_cast<std::size_t>(r.get_le<std::uint64_t>());
            total *= shape[d];
        }
        Tensor t(shape);
        if (dtype == 0) {
            for (std::size_t j = 0; j < total; ++j) {
                const auto u = r.get_le<std::uint32_t>();
                float f;
                std::memcpy(&f, &u, sizeof(f));
                t[j] = static_cast<double>(f);
            }
        } else {
            for (std::size_t j = 0; j < total; ++j) {
                const auto u = r.get_le<std::uint64_t>();
                double d;
                std::memcpy(&d, &u, sizeof(d));
                t[j] = d;
            }
        }
        ckpt.params.emplace_back(std::move(name), std::move(t));
    }
    if (r.pos != r.bytes.size()) throw ParseError(path + ": trailing bytes after parameters");
    return ckpt;
}

void apply_checkpoint(const Checkpoint& ckpt, ParamStore& params) {
    if (ckpt.params.size() != params.size()) {
        throw ParseError("checkpoint holds " + std::to_string(ckpt.params.size()) +
                         " parameters, model expects " + std::to_string(params.size()));
    }
    // Order-independent match: every expected name must appear exactly once.
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string& expected = params.name(i);
        const Tensor* found = nullptr;
        for (const auto& [name, tensor] : ckpt.params) {
            if (name == expected) {
                found = &tensor;
                break;
            }
        }
        if (!found) throw ParseError("checkpoint is missing parameter '" + expected + "'");
        if (!found->same_shape(params.at(i).value())) {
            throw ParseError("checkpoint parameter '" + expected + "' has shape " +
                             found->shape_str() + ", model expects " +
                             params.at(i).value().shape_str());
        }
        params.at(i).value_mut() = *found;
    }
}

}  // namespace camse
