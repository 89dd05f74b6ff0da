#include "gazenlq/grounding/loss.hpp"

namespace gazenlq::grounding {

torch::Tensor sigmoid_focal_loss(const torch::Tensor& logits, const torch::Tensor& labels, const torch::Tensor& valid,
                                 const FocalLossOptions& options) {
    // Masked logits are -inf; swap in zeros so neither value nor gradient turns NaN.
    auto x = torch::where(valid, logits, torch::zeros_like(logits));
    auto y = labels.to(x.dtype());
    auto p = torch::sigmoid(x);
    auto ce = torch::binary_cross_entropy_with_logits(x, y, {}, {}, at::Reduction::None);
    auto p_t = p * y + (1.0 - p) * (1.0 - y);
    auto alpha_t = options.alpha * y + (1.0 - options.alpha) * (1.0 - y);
    auto loss = alpha_t * torch::pow(1.0 - p_t, options.gamma) * ce;
    return (loss * valid.to(loss.dtype())).sum();
}

torch::Tensor offset_iou_loss(const torch::Tensor& pred, const torch::Tensor& target) {
    auto pl = pred.select(-1, 0);
    auto pr = pred.select(-1, 1);
    auto tl = target.select(-1, 0);
    auto tr = target.select(-1, 1);
    auto inter = (torch::minimum(pl, tl) + torch::minimum(pr, tr)).clamp_min(0.0);
    auto uni = (pl + pr) + (tl + tr) - inter;
    return 1.0 - inter / uni.clamp_min(1e-8);
}

LocalizationLoss localization_loss(const FeaturePyramid& pyramid, const BatchTargets& targets,
                                   const FocalLossOptions& options) {
    auto cls = pyramid.flat_cls();
    auto reg = pyramid.flat_reg();
    auto valid = pyramid.flat_mask();
    if (targets.labels.sizes() != cls.sizes()) throw ShapeError("localization_loss: target / pyramid layout mismatch");

    auto labels = targets.labels.to(cls.dtype());
    auto positive = (labels > 0.5).logical_and(valid);
    const auto n_pos = positive.sum().item<int64_t>();

    auto cls_loss = sigmoid_focal_loss(cls, labels, valid, options) / static_cast<double>(std::max<int64_t>(n_pos, 1));
    torch::Tensor reg_loss;
    if (n_pos == 0) {
        reg_loss = torch::zeros({}, cls.options());
    } else {
        auto pred = reg.index({positive});
        auto tgt = targets.offsets.to(reg.dtype()).index({positive});
        reg_loss = offset_iou_loss(pred, tgt).mean();
    }
    return {cls_loss, reg_loss, cls_loss + reg_loss};
}

}  // namespace gazenlq::grounding
