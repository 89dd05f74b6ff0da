#include "gazenlq/core/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace gazenlq::io {

namespace {

template <typename U>
void put_le(std::vector<uint8_t>& buf, U v) {
    for (size_t i = 0; i < sizeof(U); ++i) buf.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

template <typename U>
U get_le(const uint8_t* p) {
    U v = 0;
    for (size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
    return v;
}

}  // namespace

void ByteWriter::u32(uint32_t v) { put_le(buf_, v); }
void ByteWriter::u64(uint64_t v) { put_le(buf_, v); }
void ByteWriter::f32(float v) { u32(std::bit_cast<uint32_t>(v)); }
void ByteWriter::f64(double v) { u64(std::bit_cast<uint64_t>(v)); }

void ByteWriter::raw(std::string_view bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

void ByteWriter::str(std::string_view s) {
    u32(static_cast<uint32_t>(s.size()));
    raw(s);
}

void ByteWriter::long_str(std::string_view s) {
    u64(s.size());
    raw(s);
}

void ByteWriter::f32_array(std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
        const auto* p = reinterpret_cast<const uint8_t*>(values.data());
        buf_.insert(buf_.end(), p, p + values.size_bytes());
    } else {
        for (float v : values) f32(v);
    }
}

void ByteWriter::f32_tensor(const torch::Tensor& t) {
    auto c = t.detach().to(torch::kCPU, torch::kFloat32).contiguous();
    f32_array({c.data_ptr<float>(), static_cast<size_t>(c.numel())});
}

void ByteReader::need(size_t n) const {
    if (buf_.size() - pos_ < n) throw FormatError("truncated input: needed " + std::to_string(n) + " more bytes");
}

uint8_t ByteReader::u8() {
    need(1);
    return buf_[pos_++];
}

uint32_t ByteReader::u32() {
    need(4);
    auto v = get_le<uint32_t>(buf_.data() + pos_);
    pos_ += 4;
    return v;
}

uint64_t ByteReader::u64() {
    need(8);
    auto v = get_le<uint64_t>(buf_.data() + pos_);
    pos_ += 8;
    return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }
double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::raw(size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
}

std::string ByteReader::str() { return raw(u32()); }

std::string ByteReader::long_str() {
    const auto n = u64();
    if (n > remaining()) throw FormatError("truncated input: string length exceeds file");
    return raw(static_cast<size_t>(n));
}

std::vector<float> ByteReader::f32_array(size_t n) {
    if (n > remaining() / 4) throw FormatError("truncated input: float array exceeds file");
    std::vector<float> out(n);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out.data(), buf_.data() + pos_, n * 4);
        pos_ += n * 4;
    } else {
        for (auto& v : out) v = f32();
    }
    return out;
}

torch::Tensor ByteReader::f32_tensor(std::vector<int64_t> shape) {
    int64_t n = 1;
    for (auto s : shape) {
        if (s < 0) throw FormatError("negative tensor dimension");
        n *= s;
    }
    auto values = f32_array(static_cast<size_t>(n));
    return torch::from_blob(values.data(), shape, torch::kFloat32).clone();
}

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, std::span<const uint8_t> bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("write failed for " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
    write_file_atomic(path, std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

std::string fnv1a_hex(std::span<const uint8_t> bytes) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

}  // namespace gazenlq::io
