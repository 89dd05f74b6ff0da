#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gazenlq/grounding/loss.hpp"
#include "gazenlq/grounding/model.hpp"
#include "gazenlq/grounding/sample.hpp"
#include "gazenlq/grounding/targets.hpp"

namespace gazenlq::grounding {

inline constexpr const char* kGroundingCheckpointVersion = "gazenlq-ground-v1";

/// Frozen-estimator outputs for one sample, computed once before training.
struct CachedGaze {
    torch::Tensor embeddings;  // [T, d_model]
    torch::Tensor heatmaps;    // [T, 64, 64]
};

/// Collated samples plus their stacked localization targets.
struct TrainingBatch {
    GroundingBatch inputs;
    BatchTargets targets;
};

/// Pads samples [indices] into one batch. `cache` (may be empty) supplies
/// precomputed gaze streams; otherwise raw gaze features are collated when
/// every sample has them.
TrainingBatch collate_grounding_batch(const std::vector<QuerySample>& data, const std::vector<size_t>& indices,
                                      int64_t n_levels, const std::vector<CachedGaze>& cache = {});

/// Runs the estimator once per sample without gradients.
std::vector<CachedGaze> cache_gaze_outputs(gaze::GazeEstimator& estimator, const std::vector<QuerySample>& data);

struct FinetuneRecord {
    int64_t epoch = 0;
    int64_t step = 0;
    double cls = 0.0;
    double reg = 0.0;
    double total = 0.0;
};

struct FinetuneOptions {
    uint64_t shuffle_seed = 0;
    FocalLossOptions focal;
};

/// Optimizes the localization loss with AdamW, linear warm-up over
/// warmup_epochs and cosine decay afterwards, all taken from the model config.
/// With freeze_gaze the estimator is excluded from optimization and its
/// parameters are verified bitwise unchanged at the end (std::logic_error otherwise).
std::vector<FinetuneRecord> finetune(GroundingModel& model, const std::vector<QuerySample>& data,
                                     const FinetuneOptions& options = {},
                                     const std::function<void(const FinetuneRecord&)>& on_epoch = {});

/// Header `epoch,step,cls,reg,total`.
std::string finetune_log_csv(const std::vector<FinetuneRecord>& records);

struct GroundingCheckpointInfo {
    GroundingConfig config;
    std::string gaze_checkpoint_hash;  // empty when trained without a gaze checkpoint
    int64_t epoch = 0;
    int64_t step = 0;
};

void save_grounding_checkpoint(const std::filesystem::path& path, GroundingModel& model,
                               const std::string& gaze_checkpoint_hash, int64_t epoch, int64_t step);
GroundingModel load_grounding_checkpoint(const std::filesystem::path& path, GroundingCheckpointInfo* info = nullptr);

/// Builds a grounding model for `config`, loading the estimator from
/// `gaze_checkpoint` unless the mode is off. Throws std::runtime_error when a
/// required checkpoint is missing. Parameters are initialized from `init_seed`.
GroundingModel build_grounding_model(const GroundingConfig& config, const std::filesystem::path& gaze_checkpoint,
                                     uint64_t init_seed, std::string* gaze_checkpoint_hash = nullptr);

}  // namespace gazenlq::grounding
