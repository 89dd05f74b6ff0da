#include "gazenlq/core/checkpoint.hpp"

#include "gazenlq/core/binary_io.hpp"

namespace gazenlq {

std::vector<uint8_t> Checkpoint::encode() const {
    io::ByteWriter w;
    w.str(version);
    w.long_str(config.dump());
    w.u32(static_cast<uint32_t>(arrays.size()));
    for (const auto& [name, t] : arrays) {
        w.str(name);
        w.u32(static_cast<uint32_t>(t.dim()));
        for (auto s : t.sizes()) w.u64(static_cast<uint64_t>(s));
        w.f32_tensor(t);
    }
    return w.bytes();
}

Checkpoint Checkpoint::decode(std::vector<uint8_t> bytes, const std::string& expected_version) {
    io::ByteReader r(std::move(bytes));
    Checkpoint ck;
    // A foreign file may start with an arbitrary length word; cap before reading.
    const auto version_len = r.u32();
    if (version_len > 256) throw io::VersionMismatch("not a " + expected_version + " checkpoint");
    ck.version = r.raw(version_len);
    if (ck.version != expected_version) {
        throw io::VersionMismatch("checkpoint version '" + ck.version + "' != expected '" + expected_version + "'");
    }
    try {
        ck.config = nlohmann::json::parse(r.long_str());
    } catch (const nlohmann::json::exception& e) {
        throw io::FormatError(std::string("checkpoint config is not valid JSON: ") + e.what());
    }
    const auto n = r.u32();
    for (uint32_t i = 0; i < n; ++i) {
        auto name = r.str();
        const auto ndim = r.u32();
        if (ndim > 8) throw io::FormatError("implausible tensor rank in checkpoint");
        std::vector<int64_t> shape(ndim);
        for (auto& s : shape) s = static_cast<int64_t>(r.u64());
        ck.arrays.emplace_back(std::move(name), r.f32_tensor(shape));
    }
    if (!r.at_end()) throw io::FormatError("trailing bytes after checkpoint arrays");
    return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
    const auto bytes = encode();
    io::write_file_atomic(path, bytes);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path, const std::string& expected_version) {
    return decode(io::read_file(path), expected_version);
}

const torch::Tensor& Checkpoint::at(const std::string& name) const {
    for (const auto& [n, t] : arrays) {
        if (n == name) return t;
    }
    throw io::FormatError("checkpoint is missing array '" + name + "'");
}

std::vector<std::pair<std::string, torch::Tensor>> named_state(const torch::nn::Module& module,
                                                               const std::string& prefix) {
    std::vector<std::pair<std::string, torch::Tensor>> out;
    for (const auto& p : module.named_parameters(true)) out.emplace_back(prefix + p.key(), p.value().detach().clone());
    for (const auto& b : module.named_buffers(true)) out.emplace_back(prefix + b.key(), b.value().detach().clone());
    return out;
}

void load_state(torch::nn::Module& module, const Checkpoint& ckpt, const std::string& prefix) {
    torch::NoGradGuard no_grad;
    auto assign = [&](const std::string& key, torch::Tensor& dst) {
        const auto& src = ckpt.at(prefix + key);
        if (src.sizes() != dst.sizes()) {
            throw io::FormatError("shape mismatch for '" + prefix + key + "'");
        }
        dst.copy_(src.to(dst.dtype()));
    };
    for (auto& p : module.named_parameters(true)) assign(p.key(), p.value());
    for (auto& b : module.named_buffers(true)) assign(b.key(), b.value());
}

}  // namespace gazenlq
