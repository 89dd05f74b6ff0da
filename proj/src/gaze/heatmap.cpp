#include "gazenlq/gaze/heatmap.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "gazenlq/core/binary_io.hpp"

namespace gazenlq::gaze {

void validate_track(const GazeTrack& track) {
    for (size_t i = 0; i < track.size(); ++i) {
        const auto& p = track[i];
        if (p.frame_index < 0) throw std::invalid_argument("gaze track: negative frame index");
        if (i > 0 && p.frame_index <= track[i - 1].frame_index) {
            throw std::invalid_argument("gaze track: frame indices must be strictly increasing");
        }
        if (p.valid && (p.x < 0.0F || p.x > 1.0F || p.y < 0.0F || p.y > 1.0F)) {
            throw std::invalid_argument("gaze track: valid point outside [0,1]^2 at frame " +
                                        std::to_string(p.frame_index));
        }
    }
}

GazeHeatmap GazeHeatmap::uniform() {
    GazeHeatmap h;
    std::fill(h.cells_.begin(), h.cells_.end(), 1.0F / static_cast<float>(kHeatmapCells));
    h.is_distribution_ = true;
    return h;
}

GazeHeatmap GazeHeatmap::from_tensor(const torch::Tensor& grid, bool is_distribution) {
    if (grid.numel() != kHeatmapCells) throw std::invalid_argument("GazeHeatmap: expected 4096 cells");
    auto flat = grid.detach().to(torch::kCPU, torch::kFloat32).contiguous().reshape({-1});
    GazeHeatmap h;
    std::copy_n(flat.data_ptr<float>(), kHeatmapCells, h.cells_.begin());
    if (std::any_of(h.cells_.begin(), h.cells_.end(), [](float v) { return !(v >= 0.0F); })) {
        throw std::invalid_argument("GazeHeatmap: negative or NaN cell");
    }
    h.is_distribution_ = is_distribution && std::abs(h.sum() - 1.0) <= 1e-5;
    return h;
}

double GazeHeatmap::sum() const {
    double s = 0.0;
    for (float v : cells_) s += v;
    return s;
}

void GazeHeatmap::normalize() {
    const double s = sum();
    if (s <= 0.0) {
        *this = uniform();
        return;
    }
    for (auto& v : cells_) v = static_cast<float>(v / s);
    is_distribution_ = true;
}

std::pair<int64_t, int64_t> GazeHeatmap::argmax() const {
    const auto it = std::max_element(cells_.begin(), cells_.end());
    const auto idx = static_cast<int64_t>(std::distance(cells_.begin(), it));
    return {idx / kHeatmapSide, idx % kHeatmapSide};
}

torch::Tensor GazeHeatmap::to_tensor() const {
    return torch::from_blob(const_cast<float*>(cells_.data()), {kHeatmapSide, kHeatmapSide}, torch::kFloat32).clone();
}

torch::Tensor stack_heatmaps(std::span<const GazeHeatmap> maps) {
    auto out = torch::empty({static_cast<int64_t>(maps.size()), kHeatmapSide, kHeatmapSide}, torch::kFloat32);
    auto* dst = out.data_ptr<float>();
    for (const auto& m : maps) dst = std::copy(m.cells().begin(), m.cells().end(), dst);
    return out;
}

std::vector<GazeHeatmap> unstack_heatmaps(const torch::Tensor& maps) {
    std::vector<GazeHeatmap> out;
    out.reserve(static_cast<size_t>(maps.size(0)));
    for (int64_t t = 0; t < maps.size(0); ++t) out.push_back(GazeHeatmap::from_tensor(maps[t]));
    return out;
}

GazeHeatmap build_gaze_heatmap(std::span<const GazePoint> points, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("build_gaze_heatmap: sigma must be > 0");
    std::array<double, kHeatmapCells> acc{};
    bool any = false;
    const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
    std::array<double, kHeatmapSide> gx{}, gy{};
    for (const auto& p : points) {
        if (!p.valid) continue;
        any = true;
        const double u = std::clamp(static_cast<double>(p.x) * kHeatmapSide, 0.0, kHeatmapSide - 1.0);
        const double v = std::clamp(static_cast<double>(p.y) * kHeatmapSide, 0.0, kHeatmapSide - 1.0);
        for (int64_t c = 0; c < kHeatmapSide; ++c) {
            gx[static_cast<size_t>(c)] = std::exp(-(c - u) * (c - u) * inv_two_var);
            gy[static_cast<size_t>(c)] = std::exp(-(c - v) * (c - v) * inv_two_var);
        }
        for (int64_t r = 0; r < kHeatmapSide; ++r) {
            const double wy = gy[static_cast<size_t>(r)];
            for (int64_t c = 0; c < kHeatmapSide; ++c) acc[static_cast<size_t>(r * kHeatmapSide + c)] += wy * gx[static_cast<size_t>(c)];
        }
    }
    if (!any) return GazeHeatmap::uniform();

    double total = 0.0;
    for (double a : acc) total += a;
    GazeHeatmap h;
    auto cells = h.cells();
    for (size_t i = 0; i < acc.size(); ++i) cells[i] = static_cast<float>(acc[i] / total);
    h.normalize();
    return h;
}

int64_t window_count(int64_t n_frames, int64_t window, int64_t stride) {
    if (window <= 0 || stride <= 0 || stride > window) throw std::invalid_argument("window_count: need 0 < stride <= window");
    const auto t = std::max(n_frames, window);
    return (t - window) / stride + 1;
}

std::vector<GazeHeatmap> window_average_heatmaps(std::span<const GazeHeatmap> per_frame, int64_t window,
                                                 int64_t stride) {
    if (window <= 0 || stride <= 0 || stride > window) {
        throw std::invalid_argument("window_average_heatmaps: need 0 < stride <= window");
    }
    const auto n = static_cast<int64_t>(per_frame.size());
    if (n < window) {
        throw InsufficientFrames("window_average_heatmaps: " + std::to_string(n) + " frames < window " +
                                 std::to_string(window));
    }
    const auto n_out = (n - window) / stride + 1;
    std::vector<GazeHeatmap> out;
    out.reserve(static_cast<size_t>(n_out));
    std::vector<double> acc(kHeatmapCells);
    for (int64_t k = 0; k < n_out; ++k) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int64_t f = k * stride; f < k * stride + window; ++f) {
            const auto src = per_frame[static_cast<size_t>(f)].cells();
            for (size_t c = 0; c < acc.size(); ++c) acc[c] += src[c];
        }
        GazeHeatmap h;
        auto cells = h.cells();
        for (size_t c = 0; c < acc.size(); ++c) cells[c] = static_cast<float>(acc[c] / static_cast<double>(window));
        h.normalize();
        out.push_back(std::move(h));
    }
    return out;
}

std::vector<GazeHeatmap> frame_heatmaps(const GazeTrack& track, int64_t n_frames, double sigma) {
    std::vector<GazeHeatmap> frames;
    frames.reserve(static_cast<size_t>(n_frames));
    size_t i = 0;
    std::vector<GazePoint> current;
    for (int64_t f = 0; f < n_frames; ++f) {
        current.clear();
        while (i < track.size() && track[i].frame_index < f) ++i;
        while (i < track.size() && track[i].frame_index == f) current.push_back(track[i++]);
        frames.push_back(build_gaze_heatmap(current, sigma));
    }
    return frames;
}

torch::Tensor window_heatmaps(const GazeTrack& track, int64_t n_frames, double sigma, int64_t window,
                              int64_t stride) {
    auto frames = pad_to_window(frame_heatmaps(track, std::max<int64_t>(n_frames, 1), sigma), window);
    return stack_heatmaps(window_average_heatmaps(frames, window, stride));
}

torch::Tensor complement_distribution(const torch::Tensor& maps) {
    auto inv = 1.0 - maps;
    return inv / inv.sum({-2, -1}, true);
}

void write_heatmap_cache(const std::filesystem::path& path, const std::vector<HeatmapCacheRecord>& records) {
    io::ByteWriter w;
    for (const auto& r : records) {
        if (r.heatmaps.dim() != 3 || r.heatmaps.size(1) != kHeatmapSide || r.heatmaps.size(2) != kHeatmapSide) {
            throw std::invalid_argument("heatmap cache: expected [T, 64, 64] for " + r.video_id);
        }
        w.str(r.video_id);
        w.i32(static_cast<int32_t>(r.heatmaps.size(0)));
        w.f32_tensor(r.heatmaps);
    }
    io::write_file_atomic(path, w.bytes());
}

std::vector<HeatmapCacheRecord> read_heatmap_cache(const std::filesystem::path& path) {
    io::ByteReader r(io::read_file(path));
    std::vector<HeatmapCacheRecord> out;
    while (!r.at_end()) {
        HeatmapCacheRecord rec;
        rec.video_id = r.str();
        const auto t = r.i32();
        if (t < 0) throw io::FormatError("heatmap cache: negative window count");
        rec.heatmaps = r.f32_tensor({t, kHeatmapSide, kHeatmapSide});
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace gazenlq::gaze
