#pragma once

#include <torch/torch.h>

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazenlq/core/attention.hpp"
#include "gazenlq/core/sequence.hpp"
#include "gazenlq/gaze/estimator.hpp"

namespace gazenlq::grounding {

/// Which gaze stream is fused into the video: none, the estimated gaze
/// embedding, or the embedding of the complement of the estimated heatmap.
enum class GazeMode { off, positive, negative };

std::string to_string(GazeMode mode);
GazeMode parse_gaze_mode(const std::string& s);

struct GroundingConfig {
    int64_t d_model = 384;
    int64_t n_heads = 4;
    int64_t n_pyramid_levels = 4;
    int64_t d_video = 2304;
    int64_t d_text = 512;
    GazeMode gaze_mode = GazeMode::positive;
    bool freeze_gaze = true;
    double lr = 2.5e-5;
    int64_t batch = 8;
    int64_t epochs = 10;
    int64_t warmup_epochs = 4;
    double weight_decay = 0.05;

    void validate() const;
    nlohmann::json to_json() const;
    static GroundingConfig from_json(const nlohmann::json& j);
};

/// One pyramid level. `stride` is in base windows (1, 2, 4, ...).
struct PyramidLevel {
    int64_t stride = 1;
    torch::Tensor features;     // [B, T_l, d]
    torch::Tensor mask;         // [B, T_l] bool
    torch::Tensor cls_logits;   // [B, T_l]; -inf at masked positions
    torch::Tensor reg_offsets;  // [B, T_l, 2] >= 0, (left, right) in level-stride units
};

struct FeaturePyramid {
    std::vector<PyramidLevel> levels;

    std::vector<int64_t> lengths() const;
    std::vector<int64_t> strides() const;
    /// Levels concatenated along time: cls [B, N], reg [B, N, 2], mask [B, N].
    torch::Tensor flat_cls() const;
    torch::Tensor flat_reg() const;
    torch::Tensor flat_mask() const;
};

/// Estimated gaze for a batch: embeddings plus (optionally) the heatmaps they
/// came from, which negative mode needs.
struct GazeStream {
    EmbeddingSequence embeddings;
    torch::Tensor heatmaps;  // [B, T, 64, 64] or undefined
};

/// Collated model input.
struct GroundingBatch {
    EmbeddingSequence video;  // [B, T, d_video]
    EmbeddingSequence text;   // [B, L, d_text]
    EmbeddingSequence gaze_features;  // [B, T, d_in]; data undefined when absent
    /// Precomputed estimator output (frozen estimator); used instead of running it.
    std::optional<GazeStream> cached_gaze;
};

class GroundingModelImpl : public torch::nn::Module {
public:
    /// `estimator` may be null only when gaze_mode == off.
    GroundingModelImpl(GroundingConfig config, gaze::GazeEstimator estimator);

    /// Full pipeline: projections, gaze estimation, fusion, pyramid, heads.
    FeaturePyramid forward(const GroundingBatch& batch);

    /// Projected video stream (with positional encoding) and text stream.
    EmbeddingSequence project_video(const EmbeddingSequence& video);
    EmbeddingSequence project_text(const EmbeddingSequence& text);

    /// Runs the estimator on gaze features: embeddings and heatmaps.
    GazeStream estimate_gaze(const EmbeddingSequence& gaze_features);

    EmbeddingSequence fuse_streams(const EmbeddingSequence& video, const std::optional<GazeStream>& gaze,
                                   const EmbeddingSequence& text, GazeMode mode);
    FeaturePyramid pyramid_encode(const EmbeddingSequence& fused, int64_t n_levels);
    void predict_heads(FeaturePyramid& pyramid);

    const GroundingConfig& config() const { return config_; }
    gaze::GazeEstimator& estimator() { return estimator_; }
    bool has_estimator() const { return !estimator_.is_empty(); }

    nn::CrossAttentionBlock gaze_cross{nullptr};
    nn::CrossAttentionBlock text_cross{nullptr};
    nn::TransformerBlock fuse_block{nullptr};
    torch::nn::ModuleList pyramid_blocks{nullptr};
    torch::nn::Sequential cls_head{nullptr};
    torch::nn::Sequential reg_head{nullptr};

private:
    GroundingConfig config_;
    torch::nn::Linear video_proj_{nullptr};
    torch::nn::Linear text_proj_{nullptr};
    gaze::GazeEstimator estimator_{nullptr};
};
TORCH_MODULE(GroundingModel);

/// Pre-norm residual cross-attention: queries are video positions, keys and
/// values are context positions. A fully masked context returns `video` unchanged.
EmbeddingSequence cross_attention_fuse(nn::CrossAttentionBlock& block, const EmbeddingSequence& video,
                                       const EmbeddingSequence& context);

/// Factor-2 temporal downsampling: mean of the valid members of each pair,
/// mask pooled by logical or. Output length is ceil(T / 2).
EmbeddingSequence downsample2(const EmbeddingSequence& seq);

/// Level lengths T_0 = T, T_{l+1} = ceil(T_l / 2).
std::vector<int64_t> pyramid_lengths(int64_t t, int64_t n_levels);

}  // namespace gazenlq::grounding
