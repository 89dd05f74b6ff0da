#pragma once

#include <torch/torch.h>

#include "gazenlq/grounding/model.hpp"
#include "gazenlq/grounding/targets.hpp"

namespace gazenlq::grounding {

struct FocalLossOptions {
    double gamma = 2.0;
    double alpha = 0.5;
};

struct LocalizationLoss {
    torch::Tensor cls;
    torch::Tensor reg;
    torch::Tensor total;
};

/// Sigmoid focal loss summed over valid locations (masked logits excluded).
torch::Tensor sigmoid_focal_loss(const torch::Tensor& logits, const torch::Tensor& labels, const torch::Tensor& valid,
                                 const FocalLossOptions& options = {});

/// 1 - IoU between segments sharing a center, given (left, right) offsets.
/// Intersection is clamped at zero.
torch::Tensor offset_iou_loss(const torch::Tensor& pred, const torch::Tensor& target);

/// L_cls = focal loss / max(#positives, 1); L_reg = mean over positives of
/// (1 - IoU), 0 without positives; total = L_cls + L_reg.
LocalizationLoss localization_loss(const FeaturePyramid& pyramid, const BatchTargets& targets,
                                   const FocalLossOptions& options = {});

}  // namespace gazenlq::grounding
