#pragma once

#include <torch/torch.h>

#include "gazenlq/core/sequence.hpp"
#include "gazenlq/gaze/heatmap.hpp"

namespace gazenlq::gaze {

inline constexpr double kKlEpsilon = 1e-8;

/// Contrastive alignment loss summed over valid positions i:
///   -log( exp(v_i . g_i / tau) / sum_j exp(v_i . g_j / tau) )
/// with v, g L2-normalized and negatives g_j drawn from every other valid
/// position of the batch. Both sequences must share the same mask.
torch::Tensor info_nce_loss(const EmbeddingSequence& video_emb, const EmbeddingSequence& gaze_emb,
                            const torch::Tensor& tau);
torch::Tensor info_nce_loss(const EmbeddingSequence& video_emb, const EmbeddingSequence& gaze_emb, double tau);

/// KL(gt || pred) per map over the last two axes, averaged across maps
/// (optionally only where `mask` is true). `pred` is floored at 1e-8 and
/// renormalized first; 0 * log 0 counts as 0. Both inputs must be
/// distributions (nonnegative, unit mass within 1e-5).
torch::Tensor kl_gaze_loss(const torch::Tensor& gt, const torch::Tensor& pred, const torch::Tensor& mask = {});
double kl_gaze_loss(const GazeHeatmap& gt, const GazeHeatmap& pred);

/// L_gaze = L_NCE + L_KL.
inline double gaze_total_loss(double nce, double kl) { return nce + kl; }
inline torch::Tensor gaze_total_loss(const torch::Tensor& nce, const torch::Tensor& kl) { return nce + kl; }

}  // namespace gazenlq::gaze
