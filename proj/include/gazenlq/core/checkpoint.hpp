#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace gazenlq {

/// Versioned binary blob: version string, JSON config echo, named f32 arrays.
///
/// Layout (little-endian):
///   str   version          (u32 length + UTF-8)
///   lstr  config JSON      (u64 length + UTF-8)
///   u32   n_arrays
///   n_arrays x { str name; u32 ndim; u64 dims[ndim]; f32 values[prod(dims)] }
struct Checkpoint {
    std::string version;
    nlohmann::json config;
    std::vector<std::pair<std::string, torch::Tensor>> arrays;

    std::vector<uint8_t> encode() const;
    /// Throws io::VersionMismatch when the stored version differs from `expected_version`.
    static Checkpoint decode(std::vector<uint8_t> bytes, const std::string& expected_version);

    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path, const std::string& expected_version);

    const torch::Tensor& at(const std::string& name) const;
};

/// Snapshot of every parameter and buffer of `module`, keyed by qualified name.
std::vector<std::pair<std::string, torch::Tensor>> named_state(const torch::nn::Module& module,
                                                               const std::string& prefix = "");

/// Copies arrays named `prefix + name` into the module's parameters and buffers.
/// Every module entry must be present with a matching shape.
void load_state(torch::nn::Module& module, const Checkpoint& ckpt, const std::string& prefix = "");

}  // namespace gazenlq
