#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gazenlq::io {

/// Raised on malformed or truncated binary input.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a file's magic bytes or version string do not match.
class VersionMismatch : public FormatError {
public:
    using FormatError::FormatError;
};

/// Little-endian byte sink.
class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u32(uint32_t v);
    void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
    void u64(uint64_t v);
    void f32(float v);
    void f64(double v);
    void raw(std::string_view bytes);
    /// u32 length prefix followed by the UTF-8 bytes.
    void str(std::string_view s);
    /// u64 length prefix, for blocks that may exceed 4 GiB in principle.
    void long_str(std::string_view s);
    void f32_array(std::span<const float> values);
    /// Writes a float tensor as contiguous little-endian f32 values (no shape).
    void f32_tensor(const torch::Tensor& t);

    const std::vector<uint8_t>& bytes() const { return buf_; }

private:
    std::vector<uint8_t> buf_;
};

/// Little-endian byte source over an owned buffer; every read is bounds-checked.
class ByteReader {
public:
    explicit ByteReader(std::vector<uint8_t> bytes) : buf_(std::move(bytes)) {}

    uint8_t u8();
    uint32_t u32();
    int32_t i32() { return static_cast<int32_t>(u32()); }
    uint64_t u64();
    float f32();
    double f64();
    std::string raw(size_t n);
    std::string str();
    std::string long_str();
    std::vector<float> f32_array(size_t n);
    /// Reads prod(shape) f32 values into a new tensor of that shape.
    torch::Tensor f32_tensor(std::vector<int64_t> shape);

    bool at_end() const { return pos_ == buf_.size(); }
    size_t remaining() const { return buf_.size() - pos_; }

private:
    void need(size_t n) const;

    std::vector<uint8_t> buf_;
    size_t pos_ = 0;
};

std::vector<uint8_t> read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it into place, so a failed write
/// never leaves a partial artifact behind.
void write_file_atomic(const std::filesystem::path& path, std::span<const uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::span<const uint8_t> bytes);

}  // namespace gazenlq::io
