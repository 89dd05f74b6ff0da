#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gazenlq/gaze/estimator.hpp"

namespace gazenlq::gaze {

inline constexpr const char* kGazeCheckpointVersion = "gazenlq-gaze-v1";

/// One clip's window features and the matching window-averaged heatmaps.
struct GazePretrainItem {
    std::string video_id;
    torch::Tensor features;  // [T, d_in]
    torch::Tensor heatmaps;  // [T, 64, 64]
};

struct PretrainOptions {
    double lr = 1e-3;
    int64_t batch = 16;
    int64_t epochs = 50;
    int64_t warmup_epochs = 1;
    double weight_decay = 0.01;
    uint64_t shuffle_seed = 0;
    /// Epoch / step offsets when resuming; numbering continues from here.
    int64_t start_epoch = 0;
    int64_t start_step = 0;
};

/// One row of the loss log (epoch means).
struct LossRecord {
    int64_t epoch = 0;
    int64_t step = 0;
    double nce = 0.0;
    double kl = 0.0;
    double total = 0.0;
};

struct GazeLosses {
    double nce = 0.0;
    double kl = 0.0;
    double total() const { return nce + kl; }
};

/// Mean batch losses over the whole set, batches taken in dataset order.
GazeLosses evaluate_gaze_losses(GazeEstimator& model, const std::vector<GazePretrainItem>& data, int64_t batch);

/// Mini-batch AdamW on L_gaze with warm-up + cosine learning rate.
/// Deterministic for a fixed shuffle seed and initial parameters.
std::vector<LossRecord> pretrain_gaze(GazeEstimator& model, const std::vector<GazePretrainItem>& data,
                                      const PretrainOptions& options,
                                      const std::function<void(const LossRecord&)>& on_epoch = {});

/// Collates items [idx...] into padded feature / heatmap batches.
struct GazeBatch {
    EmbeddingSequence features;  // [B, T, d_in]
    torch::Tensor heatmaps;      // [B, T, 64, 64], uniform at padding
};
GazeBatch collate_gaze_batch(const std::vector<GazePretrainItem>& data, const std::vector<size_t>& indices);

/// Header `epoch,step,nce,kl,total`.
std::string loss_log_csv(const std::vector<LossRecord>& records);

struct GazeCheckpointInfo {
    GazeEstimatorConfig config;
    int64_t epoch = 0;
    int64_t step = 0;
};

void save_gaze_checkpoint(const std::filesystem::path& path, GazeEstimator& model, int64_t epoch, int64_t step);
GazeEstimator load_gaze_checkpoint(const std::filesystem::path& path, GazeCheckpointInfo* info = nullptr);

}  // namespace gazenlq::gaze
