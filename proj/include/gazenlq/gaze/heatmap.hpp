#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gazenlq::gaze {

inline constexpr int64_t kHeatmapSide = 64;
inline constexpr int64_t kHeatmapCells = kHeatmapSide * kHeatmapSide;

/// One tracker sample. x, y are fractions of frame width / height.
struct GazePoint {
    int64_t frame_index = 0;
    float x = 0.0F;
    float y = 0.0F;
    bool valid = false;

    bool operator==(const GazePoint&) const = default;
};

using GazeTrack = std::vector<GazePoint>;

/// Throws std::invalid_argument if a valid point lies outside [0,1]^2 or frame
/// indices are not strictly increasing.
void validate_track(const GazeTrack& track);

/// 64x64 grid of nonnegative weights, row-major with row = y, col = x.
class GazeHeatmap {
public:
    GazeHeatmap() : cells_(kHeatmapCells, 0.0F) {}

    static GazeHeatmap uniform();
    /// Copies a [64, 64] (or 4096-element) tensor. The result is flagged as a
    /// distribution only when `is_distribution` is set and the sum checks out.
    static GazeHeatmap from_tensor(const torch::Tensor& grid, bool is_distribution = true);

    float at(int64_t row, int64_t col) const { return cells_[static_cast<size_t>(row * kHeatmapSide + col)]; }
    float& at(int64_t row, int64_t col) { return cells_[static_cast<size_t>(row * kHeatmapSide + col)]; }

    std::span<const float> cells() const { return cells_; }
    std::span<float> cells() { return cells_; }

    bool is_distribution() const { return is_distribution_; }
    double sum() const;
    /// Rescales to unit mass. A zero grid becomes uniform.
    void normalize();

    /// (row, col) of the largest cell; first in row-major order on ties.
    std::pair<int64_t, int64_t> argmax() const;

    torch::Tensor to_tensor() const;

    bool operator==(const GazeHeatmap&) const = default;

private:
    std::vector<float> cells_;
    bool is_distribution_ = false;
};

/// Stack [T, 64, 64] float32.
torch::Tensor stack_heatmaps(std::span<const GazeHeatmap> maps);
std::vector<GazeHeatmap> unstack_heatmaps(const torch::Tensor& maps);

/// Sum of isotropic Gaussians (std `sigma` cells) at every valid point, mapped
/// to the grid by u = clamp(x * 64, 0, 63), then normalized. No valid point
/// yields the uniform distribution.
GazeHeatmap build_gaze_heatmap(std::span<const GazePoint> points, double sigma);

/// Raised when a sequence is shorter than one window.
class InsufficientFrames : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Mean of each [k*stride, k*stride + window) block, renormalized.
/// Output length is floor((T - window) / stride) + 1.
std::vector<GazeHeatmap> window_average_heatmaps(std::span<const GazeHeatmap> per_frame, int64_t window,
                                                 int64_t stride);

/// Number of windows produced for `n_frames` (after padding to one window).
int64_t window_count(int64_t n_frames, int64_t window, int64_t stride);

/// Right-pads by repeating the last element until `window` entries exist.
template <typename T>
std::vector<T> pad_to_window(std::vector<T> frames, int64_t window) {
    if (frames.empty()) throw InsufficientFrames("cannot pad an empty sequence");
    while (static_cast<int64_t>(frames.size()) < window) frames.push_back(frames.back());
    return frames;
}

/// Per-frame heatmaps for frames [0, n_frames): each frame gathers the track
/// entries with its frame index.
std::vector<GazeHeatmap> frame_heatmaps(const GazeTrack& track, int64_t n_frames, double sigma);

/// Track -> per-frame maps -> padded -> window-averaged, as [T, 64, 64].
torch::Tensor window_heatmaps(const GazeTrack& track, int64_t n_frames, double sigma, int64_t window,
                              int64_t stride);

/// (1 - G) / sum(1 - G) over the last two axes of a [..., H, W] distribution.
torch::Tensor complement_distribution(const torch::Tensor& maps);

/// One video's cached window heatmaps.
struct HeatmapCacheRecord {
    std::string video_id;
    torch::Tensor heatmaps;  // [T, 64, 64] float32
};

/// Concatenated records: str video_id (u32 length + UTF-8), i32 T,
/// then T * 4096 little-endian f32 values, row-major per window.
void write_heatmap_cache(const std::filesystem::path& path, const std::vector<HeatmapCacheRecord>& records);
std::vector<HeatmapCacheRecord> read_heatmap_cache(const std::filesystem::path& path);

}  // namespace gazenlq::gaze
