#include "gazenlq/grounding/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gazenlq/gaze/heatmap.hpp"

namespace gazenlq::grounding {

namespace {

/// Gaze windows are aligned with video windows; the same position table lets
/// video queries find their own window among the gaze keys.
EmbeddingSequence with_positions(const EmbeddingSequence& seq) {
    const auto s = seq.as_batch();
    auto pos = nn::sinusoidal_positions(s.length(), s.d_model(), s.data.scalar_type()).unsqueeze(0);
    // Unit-variance rows, so the position table does not drown small embeddings.
    auto x = torch::layer_norm(s.data, {s.d_model()});
    return {(x + pos) * s.mask.to(s.data.dtype()).unsqueeze(-1), s.mask};
}

}  // namespace

std::string to_string(GazeMode mode) {
    switch (mode) {
        case GazeMode::off: return "off";
        case GazeMode::positive: return "positive";
        case GazeMode::negative: return "negative";
    }
    return "?";
}

GazeMode parse_gaze_mode(const std::string& s) {
    if (s == "off") return GazeMode::off;
    if (s == "positive") return GazeMode::positive;
    if (s == "negative") return GazeMode::negative;
    throw std::invalid_argument("gaze mode must be off, positive or negative (got '" + s + "')");
}

void GroundingConfig::validate() const {
    if (d_model < 1 || n_heads < 1 || d_model % n_heads != 0) {
        throw std::invalid_argument("grounding config: d_model must be divisible by n_heads");
    }
    if (n_pyramid_levels < 1) throw std::invalid_argument("grounding config: n_pyramid_levels must be >= 1");
    if (d_video < 1 || d_text < 1) throw std::invalid_argument("grounding config: feature widths must be >= 1");
    if (!(lr >= 0.0)) throw std::invalid_argument("grounding config: lr must be >= 0");
    if (batch < 1 || epochs < 0 || warmup_epochs < 0) {
        throw std::invalid_argument("grounding config: batch >= 1, epochs >= 0, warmup_epochs >= 0");
    }
}

nlohmann::json GroundingConfig::to_json() const {
    return {{"d_model", d_model},
            {"n_heads", n_heads},
            {"n_pyramid_levels", n_pyramid_levels},
            {"d_video", d_video},
            {"d_text", d_text},
            {"gaze_mode", to_string(gaze_mode)},
            {"freeze_gaze", freeze_gaze},
            {"lr", lr},
            {"batch", batch},
            {"epochs", epochs},
            {"warmup_epochs", warmup_epochs},
            {"weight_decay", weight_decay}};
}

GroundingConfig GroundingConfig::from_json(const nlohmann::json& j) {
    GroundingConfig c;
    c.d_model = j.at("d_model").get<int64_t>();
    c.n_heads = j.at("n_heads").get<int64_t>();
    c.n_pyramid_levels = j.at("n_pyramid_levels").get<int64_t>();
    c.d_video = j.at("d_video").get<int64_t>();
    c.d_text = j.at("d_text").get<int64_t>();
    c.gaze_mode = parse_gaze_mode(j.at("gaze_mode").get<std::string>());
    c.freeze_gaze = j.at("freeze_gaze").get<bool>();
    c.lr = j.at("lr").get<double>();
    c.batch = j.at("batch").get<int64_t>();
    c.epochs = j.at("epochs").get<int64_t>();
    c.warmup_epochs = j.at("warmup_epochs").get<int64_t>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.validate();
    return c;
}

std::vector<int64_t> FeaturePyramid::lengths() const {
    std::vector<int64_t> out;
    for (const auto& l : levels) out.push_back(l.features.size(1));
    return out;
}

std::vector<int64_t> FeaturePyramid::strides() const {
    std::vector<int64_t> out;
    for (const auto& l : levels) out.push_back(l.stride);
    return out;
}

torch::Tensor FeaturePyramid::flat_cls() const {
    std::vector<torch::Tensor> parts;
    for (const auto& l : levels) parts.push_back(l.cls_logits);
    return torch::cat(parts, 1);
}

torch::Tensor FeaturePyramid::flat_reg() const {
    std::vector<torch::Tensor> parts;
    for (const auto& l : levels) parts.push_back(l.reg_offsets);
    return torch::cat(parts, 1);
}

torch::Tensor FeaturePyramid::flat_mask() const {
    std::vector<torch::Tensor> parts;
    for (const auto& l : levels) parts.push_back(l.mask);
    return torch::cat(parts, 1);
}

EmbeddingSequence cross_attention_fuse(nn::CrossAttentionBlock& block, const EmbeddingSequence& video,
                                       const EmbeddingSequence& context) {
    if (video.d_model() != context.d_model()) {
        throw ShapeError("cross_attention_fuse: video width " + std::to_string(video.d_model()) +
                         " != context width " + std::to_string(context.d_model()));
    }
    const auto v = video.as_batch();
    const auto c = context.as_batch();
    auto out = block(v.data, c.data, c.mask);
    if (!video.batched()) return {out.squeeze(0), video.mask};
    return {out, video.mask};
}

EmbeddingSequence downsample2(const EmbeddingSequence& seq) {
    auto x = seq.data;
    auto m = seq.mask;
    const auto b = x.size(0);
    const auto t = x.size(1);
    const auto d = x.size(2);
    if (t % 2 == 1) {
        x = torch::cat({x, torch::zeros({b, 1, d}, x.options())}, 1);
        m = torch::cat({m, torch::zeros({b, 1}, m.options())}, 1);
    }
    const auto half = x.size(1) / 2;
    auto mf = m.to(x.dtype()).unsqueeze(-1);
    auto summed = (x * mf).view({b, half, 2, d}).sum(2);
    auto count = mf.view({b, half, 2, 1}).sum(2);
    auto pooled_mask = m.view({b, half, 2}).any(2);
    return {summed / count.clamp_min(1.0), pooled_mask};
}

std::vector<int64_t> pyramid_lengths(int64_t t, int64_t n_levels) {
    std::vector<int64_t> out;
    for (int64_t l = 0; l < n_levels; ++l) {
        out.push_back(t);
        t = (t + 1) / 2;
    }
    return out;
}

GroundingModelImpl::GroundingModelImpl(GroundingConfig config, gaze::GazeEstimator estimator)
    : config_(config), estimator_(std::move(estimator)) {
    config_.validate();
    const auto d = config_.d_model;
    if (config_.gaze_mode != GazeMode::off) {
        if (estimator_.is_empty()) throw std::invalid_argument("grounding model: gaze mode requires a gaze estimator");
        if (estimator_->config().d_model != d) throw ShapeError("grounding model: gaze embedding width != d_model");
    }
    video_proj_ = register_module("video_proj", torch::nn::Linear(config_.d_video, d));
    text_proj_ = register_module("text_proj", torch::nn::Linear(config_.d_text, d));
    gaze_cross = register_module("gaze_cross", nn::CrossAttentionBlock(d, config_.n_heads));
    text_cross = register_module("text_cross", nn::CrossAttentionBlock(d, config_.n_heads));
    fuse_block = register_module("fuse_block", nn::TransformerBlock(d, config_.n_heads));
    pyramid_blocks = register_module("pyramid_blocks", torch::nn::ModuleList());
    for (int64_t l = 0; l < config_.n_pyramid_levels; ++l) pyramid_blocks->push_back(nn::TransformerBlock(d, config_.n_heads));

    auto head = [d](int64_t out) {
        return torch::nn::Sequential(torch::nn::LayerNorm(torch::nn::LayerNormOptions({d})), torch::nn::Linear(d, d),
                                     torch::nn::ReLU(), torch::nn::Linear(d, out));
    };
    cls_head = register_module("cls_head", head(1));
    reg_head = register_module("reg_head", head(2));
    {
        // Focal-loss prior: start every location at p = 0.01.
        torch::NoGradGuard no_grad;
        cls_head[3]->as<torch::nn::Linear>()->bias.fill_(-std::log(99.0));
    }
    if (!estimator_.is_empty()) register_module("gaze_estimator", estimator_);
}

EmbeddingSequence GroundingModelImpl::project_video(const EmbeddingSequence& video) {
    const auto v = video.as_batch();
    if (v.d_model() != config_.d_video) throw ShapeError("grounding model: unexpected video feature width");
    auto x = video_proj_(v.data);
    x = x + nn::sinusoidal_positions(x.size(1), config_.d_model, x.scalar_type()).unsqueeze(0);
    return {x * v.mask.to(x.dtype()).unsqueeze(-1), v.mask};
}

EmbeddingSequence GroundingModelImpl::project_text(const EmbeddingSequence& text) {
    const auto t = text.as_batch();
    if (t.d_model() != config_.d_text) throw ShapeError("grounding model: unexpected text feature width");
    return {text_proj_(t.data), t.mask};
}

GazeStream GroundingModelImpl::estimate_gaze(const EmbeddingSequence& gaze_features) {
    if (estimator_.is_empty()) throw std::logic_error("grounding model has no gaze estimator");
    auto est = estimator_->forward(gaze_features.as_batch());
    return {est.embeddings, est.heatmaps};
}

EmbeddingSequence GroundingModelImpl::fuse_streams(const EmbeddingSequence& video, const std::optional<GazeStream>& gaze,
                                                   const EmbeddingSequence& text, GazeMode mode) {
    const auto v = video.as_batch();
    auto text_fused = cross_attention_fuse(text_cross, v, text.as_batch());
    torch::Tensor sum;
    switch (mode) {
        case GazeMode::off:
            sum = text_fused.data;
            break;
        case GazeMode::positive: {
            if (!gaze) throw std::invalid_argument("fuse_streams: positive gaze mode needs a gaze stream");
            auto gaze_fused = cross_attention_fuse(gaze_cross, v, with_positions(gaze->embeddings));
            // Both fused streams carry the video residual; count it once.
            sum = text_fused.data + (gaze_fused.data - v.data);
            break;
        }
        case GazeMode::negative: {
            if (!gaze || !gaze->heatmaps.defined()) {
                throw std::invalid_argument("fuse_streams: negative gaze mode needs the estimated heatmaps");
            }
            if (estimator_.is_empty()) throw std::invalid_argument("fuse_streams: negative gaze mode needs the gaze branch");
            const auto emb = gaze->embeddings.as_batch();
            auto maps = gaze->heatmaps.dim() == 3 ? gaze->heatmaps.unsqueeze(0) : gaze->heatmaps;
            auto negative = estimator_->embed_heatmaps(gaze::complement_distribution(maps), emb.mask);
            auto gaze_fused = cross_attention_fuse(gaze_cross, v, with_positions(negative));
            sum = text_fused.data + (gaze_fused.data - v.data);
            break;
        }
    }
    auto out = fuse_block(sum, v.mask);
    if (!video.batched()) return {out.squeeze(0), video.mask};
    return {out, v.mask};
}

FeaturePyramid GroundingModelImpl::pyramid_encode(const EmbeddingSequence& fused, int64_t n_levels) {
    if (n_levels < 1 || n_levels > static_cast<int64_t>(pyramid_blocks->size())) {
        throw std::invalid_argument("pyramid_encode: n_levels must be in [1, " + std::to_string(pyramid_blocks->size()) + "]");
    }
    FeaturePyramid pyr;
    auto cur = fused.as_batch();
    for (int64_t l = 0; l < n_levels; ++l) {
        if (l > 0) cur = downsample2(cur);
        auto block = pyramid_blocks[static_cast<size_t>(l)]->as<nn::TransformerBlock>();
        cur = EmbeddingSequence(block->forward(cur.data, cur.mask), cur.mask);
        pyr.levels.push_back({int64_t{1} << l, cur.data, cur.mask, {}, {}});
    }
    return pyr;
}

void GroundingModelImpl::predict_heads(FeaturePyramid& pyramid) {
    for (auto& level : pyramid.levels) {
        auto logits = cls_head->forward(level.features).squeeze(-1);
        level.cls_logits = logits.masked_fill(level.mask.logical_not(), -std::numeric_limits<double>::infinity());
        level.reg_offsets = torch::softplus(reg_head->forward(level.features));
    }
}

FeaturePyramid GroundingModelImpl::forward(const GroundingBatch& batch) {
    auto video = project_video(batch.video);
    auto text = project_text(batch.text);
    std::optional<GazeStream> gaze;
    if (config_.gaze_mode != GazeMode::off) {
        if (batch.cached_gaze) {
            gaze = batch.cached_gaze;
        } else {
            if (!batch.gaze_features.data.defined()) {
                throw std::invalid_argument("grounding model: gaze mode needs gaze features in the batch");
            }
            gaze = estimate_gaze(batch.gaze_features);
        }
    }
    auto fused = fuse_streams(video, gaze, text, config_.gaze_mode);
    auto pyramid = pyramid_encode(fused, config_.n_pyramid_levels);
    predict_heads(pyramid);
    return pyramid;
}

}  // namespace gazenlq::grounding
