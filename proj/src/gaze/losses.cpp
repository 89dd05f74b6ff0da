#include "gazenlq/gaze/losses.hpp"

#include <stdexcept>

namespace gazenlq::gaze {

namespace {

void require_distribution(const torch::Tensor& maps, const char* what) {
    if (maps.dim() < 2) throw std::invalid_argument(std::string("kl_gaze_loss: ") + what + " must be [..., H, W]");
    auto d = maps.detach();
    if ((d < 0).any().item<bool>() || d.isnan().any().item<bool>()) {
        throw std::invalid_argument(std::string("kl_gaze_loss: ") + what + " has negative or NaN entries");
    }
    auto err = (d.to(torch::kFloat64).sum({-2, -1}) - 1.0).abs();
    if (err.numel() > 0 && err.max().item<double>() > 1e-5) {
        throw std::invalid_argument(std::string("kl_gaze_loss: ") + what + " is not a distribution");
    }
}

}  // namespace

torch::Tensor info_nce_loss(const EmbeddingSequence& video_emb, const EmbeddingSequence& gaze_emb,
                            const torch::Tensor& tau) {
    if (!tau.defined() || tau.item<double>() <= 0.0) throw std::invalid_argument("info_nce_loss: tau must be > 0");
    if (!video_emb.mask.equal(gaze_emb.mask)) {
        throw std::invalid_argument("info_nce_loss: video and gaze masks differ");
    }
    if (video_emb.d_model() != gaze_emb.d_model()) throw ShapeError("info_nce_loss: embedding widths differ");
    auto v = torch::nn::functional::normalize(video_emb.valid_rows(),
                                              torch::nn::functional::NormalizeFuncOptions().dim(1).eps(1e-12));
    auto g = torch::nn::functional::normalize(gaze_emb.valid_rows(),
                                              torch::nn::functional::NormalizeFuncOptions().dim(1).eps(1e-12));
    if (v.size(0) == 0) throw std::invalid_argument("info_nce_loss: no valid positions");
    auto logits = torch::matmul(v, g.t()) / tau.to(v.dtype());
    return (torch::logsumexp(logits, 1) - logits.diagonal()).sum();
}

torch::Tensor info_nce_loss(const EmbeddingSequence& video_emb, const EmbeddingSequence& gaze_emb, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("info_nce_loss: tau must be > 0");
    return info_nce_loss(video_emb, gaze_emb, torch::tensor(tau, torch::kFloat64));
}

torch::Tensor kl_gaze_loss(const torch::Tensor& gt, const torch::Tensor& pred, const torch::Tensor& mask) {
    if (gt.sizes() != pred.sizes()) throw ShapeError("kl_gaze_loss: gt and pred shapes differ");
    require_distribution(gt, "gt");
    require_distribution(pred, "pred");

    auto floored = pred.clamp_min(kKlEpsilon);
    floored = floored / floored.sum({-2, -1}, true);
    // xlogy gives 0 * log 0 = 0 for the entropy term.
    auto per_map = (torch::xlogy(gt, gt) - gt * torch::log(floored)).sum({-2, -1});

    if (!mask.defined()) return per_map.mean();
    auto m = mask.to(per_map.dtype());
    return (per_map * m).sum() / m.sum().clamp_min(1.0);
}

double kl_gaze_loss(const GazeHeatmap& gt, const GazeHeatmap& pred) {
    return kl_gaze_loss(gt.to_tensor().to(torch::kFloat64), pred.to_tensor().to(torch::kFloat64)).item<double>();
}

}  // namespace gazenlq::gaze
