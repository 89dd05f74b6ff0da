#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazenlq/core/interval.hpp"
#include "gazenlq/gaze/heatmap.hpp"
#include "gazenlq/gaze/pretrain.hpp"
#include "gazenlq/grounding/sample.hpp"

namespace gazenlq::data {

/// Knobs of the synthetic world. Every video has one planted target segment:
/// gaze concentrates on the target's grid cell there, the gaze-estimator input
/// features are shifted along a target direction, and the grounding video
/// features carry a weaker copy of the same cue. A distractor segment, when
/// present, repeats the video cue without any gaze or gaze-feature signal.
struct SyntheticSpec {
    int64_t n_videos = 64;
    int64_t frames_per_video = 272;
    int64_t d_video = 2304;
    int64_t d_text = 512;
    int64_t d_gaze = 1536;
    uint64_t seed = 0;
    /// Fixes target directions, planted cells and the vocabulary, so datasets
    /// generated with different `seed`s share one world.
    uint64_t world_seed = 7;
    double gaze_signal_strength = 0.9;
    double video_signal_strength = 0.5;
    double distractor_rate = 0.5;
    int64_t vocabulary_size = 8;
    int64_t text_length = 4;
    double fps = 30.0;
    int64_t window = 32;
    int64_t stride = 16;
    int64_t min_segment_windows = 2;
    int64_t max_segment_windows = 6;
    /// Norm of the planted shift at full strength, in units of the per-dimension noise std.
    double feature_amplitude = 8.0;
    double invalid_gaze_rate = 0.05;
    /// Std of planted gaze points around the target location, as a fraction of the frame.
    double gaze_jitter = 0.002;

    void validate() const;
    nlohmann::json to_json() const;
    static SyntheticSpec from_json(const nlohmann::json& j);

    int64_t num_windows() const;
    double seconds_per_window() const { return static_cast<double>(stride) / fps; }
};

struct SyntheticVideo {
    std::string video_id;
    int64_t target = 0;
    int64_t planted_row = 0;
    int64_t planted_col = 0;
    int64_t n_frames = 0;
    std::string query_text;
    Interval gt_interval;
    Interval distractor;          // length 0 when absent
    torch::Tensor video_features;  // [T, d_video]
    torch::Tensor gaze_features;   // [T, d_gaze]
    torch::Tensor text_embeddings; // [L, d_text]
    gaze::GazeTrack gaze_track;    // one entry per frame

    bool has_distractor() const { return distractor.length() > 0.0; }
    bool operator==(const SyntheticVideo& other) const;
};

struct SyntheticDataset {
    SyntheticSpec spec;
    std::vector<SyntheticVideo> videos;

    grounding::QuerySample query_sample(size_t i) const;
    std::vector<grounding::QuerySample> query_samples() const;

    /// Window-averaged ground-truth heatmaps [T, 64, 64] of video i.
    torch::Tensor window_heatmaps(size_t i, double sigma) const;
    std::vector<gaze::GazePretrainItem> pretrain_items(double sigma) const;

    /// Windows whose span [t*spw, (t+1)*spw) lies inside the target segment.
    std::vector<int64_t> in_segment_windows(size_t i) const;

    /// Videos [begin, end) as a dataset sharing this spec.
    SyntheticDataset slice(size_t begin, size_t end) const;
};

SyntheticDataset generate_dataset(const SyntheticSpec& spec);

/// Magic "GNLQDS1\0", u64-length metadata JSON, u32 record count, then per record:
/// str id, i32 target, i32 planted row, i32 planted col, i32 n_frames, str query text,
/// f64 gt start/end, f64 distractor start/end, f32 arrays (u32 ndim, u64 dims, values)
/// for video, gaze and text features, then u32 n_points and per point
/// i32 frame, f32 x, f32 y, u8 valid.
std::vector<uint8_t> serialize_dataset(const SyntheticDataset& dataset);
SyntheticDataset deserialize_dataset(std::vector<uint8_t> bytes);
void save_dataset(const std::filesystem::path& path, const SyntheticDataset& dataset);
SyntheticDataset load_dataset(const std::filesystem::path& path);

}  // namespace gazenlq::data
