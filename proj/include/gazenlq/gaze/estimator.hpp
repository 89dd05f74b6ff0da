#pragma once

#include <torch/torch.h>

#include <json.hpp>

#include "gazenlq/core/attention.hpp"
#include "gazenlq/core/sequence.hpp"

namespace gazenlq::gaze {

struct GazeEstimatorConfig {
    int64_t d_in = 1536;
    int64_t d_model = 384;
    int64_t n_glu_layers = 5;
    int64_t n_heads = 4;
    int64_t window = 32;
    int64_t stride = 16;
    double tau = 0.07;
    bool learnable_tau = false;
    double heatmap_sigma = 3.0;
    int64_t conv_channels = 8;

    /// Throws std::invalid_argument on tau <= 0, window <= 0, stride outside
    /// (0, window], n_glu_layers < 1 or d_model not divisible by n_heads.
    void validate() const;

    nlohmann::json to_json() const;
    static GazeEstimatorConfig from_json(const nlohmann::json& j);
};

/// Gated linear unit with residual and post-norm:
/// y = LN(x + a * sigmoid(b)), [a, b] = split(W x + c).
class GluLayerImpl : public torch::nn::Module {
public:
    explicit GluLayerImpl(int64_t d_model);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::Linear proj_{nullptr};
    torch::nn::LayerNorm norm_{nullptr};
};
TORCH_MODULE(GluLayer);

/// Heatmap encoder: 3D conv block over (time, 64, 64), spatial pooling to 8x8,
/// and an MLP projection head. Temporal kernel 3 with zero padding, so only
/// interior windows are translation-equivariant in time.
class GazeBranchImpl : public torch::nn::Module {
public:
    GazeBranchImpl(int64_t channels, int64_t d_embed);

    /// heatmaps: [B, T, 64, 64]; mask: [B, T]. Returns [B, T, d_embed], zero at masked rows.
    torch::Tensor forward(const torch::Tensor& heatmaps, const torch::Tensor& mask);

private:
    torch::nn::Conv3d conv1_{nullptr}, conv2_{nullptr};
    torch::nn::Linear fc1_{nullptr}, fc2_{nullptr};
};
TORCH_MODULE(GazeBranch);

struct GazeEstimate {
    EmbeddingSequence embeddings;  // [B, T, 384], zero at masked rows
    torch::Tensor heatmaps;        // [B, T, 64, 64], each a distribution
};

/// Dual-branch gaze estimator. The video branch (input projection, GLU stack,
/// masked self-attention, projection head, heatmap regression head) runs at
/// inference time; the gaze branch only embeds heatmaps for the contrastive
/// objective and for complement-heatmap fusion.
class GazeEstimatorImpl : public torch::nn::Module {
public:
    explicit GazeEstimatorImpl(GazeEstimatorConfig config);

    /// video_features: [T, d_in] or [B, T, d_in].
    GazeEstimate forward(const EmbeddingSequence& video_features);

    /// heatmaps: [T, 64, 64] or [B, T, 64, 64].
    EmbeddingSequence embed_heatmaps(const torch::Tensor& heatmaps, const torch::Tensor& mask = {});

    /// Effective temperature (exp of the learnable log-tau when enabled).
    torch::Tensor temperature() const;

    const GazeEstimatorConfig& config() const { return config_; }

    /// Parameters of the video branch and regression head only.
    std::vector<torch::Tensor> video_branch_parameters() const;

private:
    GazeEstimatorConfig config_;
    torch::nn::Linear input_proj_{nullptr};
    torch::nn::ModuleList glu_layers_{nullptr};
    torch::nn::LayerNorm attn_norm_{nullptr};
    nn::MultiHeadAttention attention_{nullptr};
    torch::nn::Linear head_fc1_{nullptr}, head_fc2_{nullptr};
    torch::nn::LayerNorm heatmap_norm_{nullptr};
    torch::nn::Linear heatmap_head_{nullptr};
    GazeBranch gaze_branch_{nullptr};
    torch::Tensor log_tau_;
};
TORCH_MODULE(GazeEstimator);

/// Convenience wrappers matching the per-operation contracts.
GazeEstimate gaze_estimator_forward(GazeEstimator& model, const EmbeddingSequence& video_features);
EmbeddingSequence gaze_branch_forward(GazeEstimator& model, const torch::Tensor& heatmaps);

}  // namespace gazenlq::gaze
