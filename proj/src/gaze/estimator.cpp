#include "gazenlq/gaze/estimator.hpp"

#include <cmath>
#include <stdexcept>

#include "gazenlq/gaze/heatmap.hpp"

namespace gazenlq::gaze {

void GazeEstimatorConfig::validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("gaze config: tau must be > 0");
    if (window <= 0) throw std::invalid_argument("gaze config: window must be > 0");
    if (stride <= 0 || stride > window) throw std::invalid_argument("gaze config: stride must be in (0, window]");
    if (n_glu_layers < 1) throw std::invalid_argument("gaze config: n_glu_layers must be >= 1");
    if (d_in < 1 || d_model < 1) throw std::invalid_argument("gaze config: feature widths must be >= 1");
    if (n_heads < 1 || d_model % n_heads != 0) throw std::invalid_argument("gaze config: d_model % n_heads != 0");
    if (!(heatmap_sigma > 0.0)) throw std::invalid_argument("gaze config: heatmap_sigma must be > 0");
    if (conv_channels < 1) throw std::invalid_argument("gaze config: conv_channels must be >= 1");
}

nlohmann::json GazeEstimatorConfig::to_json() const {
    return {{"d_in", d_in},
            {"d_model", d_model},
            {"n_glu_layers", n_glu_layers},
            {"n_heads", n_heads},
            {"window", window},
            {"stride", stride},
            {"tau", tau},
            {"learnable_tau", learnable_tau},
            {"heatmap_sigma", heatmap_sigma},
            {"conv_channels", conv_channels}};
}

GazeEstimatorConfig GazeEstimatorConfig::from_json(const nlohmann::json& j) {
    GazeEstimatorConfig c;
    c.d_in = j.at("d_in").get<int64_t>();
    c.d_model = j.at("d_model").get<int64_t>();
    c.n_glu_layers = j.at("n_glu_layers").get<int64_t>();
    c.n_heads = j.at("n_heads").get<int64_t>();
    c.window = j.at("window").get<int64_t>();
    c.stride = j.at("stride").get<int64_t>();
    c.tau = j.at("tau").get<double>();
    c.learnable_tau = j.at("learnable_tau").get<bool>();
    c.heatmap_sigma = j.at("heatmap_sigma").get<double>();
    c.conv_channels = j.at("conv_channels").get<int64_t>();
    c.validate();
    return c;
}

GluLayerImpl::GluLayerImpl(int64_t d_model) {
    proj_ = register_module("proj", torch::nn::Linear(d_model, 2 * d_model));
    norm_ = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d_model})));
}

torch::Tensor GluLayerImpl::forward(const torch::Tensor& x) {
    auto halves = proj_(x).chunk(2, -1);
    return norm_(x + halves[0] * torch::sigmoid(halves[1]));
}

GazeBranchImpl::GazeBranchImpl(int64_t channels, int64_t d_embed) {
    conv1_ = register_module(
        "conv1", torch::nn::Conv3d(torch::nn::Conv3dOptions(1, channels, {3, 5, 5}).stride({1, 2, 2}).padding({1, 2, 2})));
    conv2_ = register_module("conv2", torch::nn::Conv3d(torch::nn::Conv3dOptions(channels, 2 * channels, {1, 3, 3})
                                                            .stride({1, 2, 2})
                                                            .padding({0, 1, 1})));
    fc1_ = register_module("fc1", torch::nn::Linear(2 * channels * 64, d_embed));
    fc2_ = register_module("fc2", torch::nn::Linear(d_embed, d_embed));
}

torch::Tensor GazeBranchImpl::forward(const torch::Tensor& heatmaps, const torch::Tensor& mask) {
    const auto b = heatmaps.size(0);
    const auto t = heatmaps.size(1);
    auto m = mask.to(heatmaps.dtype());
    // Rescale so the uniform map is all ones.
    auto x = (heatmaps * static_cast<double>(kHeatmapCells)) * m.view({b, t, 1, 1});
    x = x.unsqueeze(1);                              // [B, 1, T, 64, 64]
    x = torch::gelu(conv1_(x));                      // [B, C, T, 32, 32]
    x = torch::gelu(conv2_(x));                      // [B, 2C, T, 16, 16]
    x = torch::avg_pool3d(x, {1, 2, 2}, {1, 2, 2});  // [B, 2C, T, 8, 8]
    x = x.permute({0, 2, 1, 3, 4}).reshape({b, t, -1});
    auto e = fc2_(torch::gelu(fc1_(x)));
    return e * m.unsqueeze(-1);
}

GazeEstimatorImpl::GazeEstimatorImpl(GazeEstimatorConfig config) : config_(config) {
    config_.validate();
    const auto d = config_.d_model;
    input_proj_ = register_module("input_proj", torch::nn::Linear(config_.d_in, d));
    glu_layers_ = register_module("glu_layers", torch::nn::ModuleList());
    for (int64_t i = 0; i < config_.n_glu_layers; ++i) glu_layers_->push_back(GluLayer(d));
    attn_norm_ = register_module("attn_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d})));
    attention_ = register_module("attention", nn::MultiHeadAttention(d, config_.n_heads));
    head_fc1_ = register_module("head_fc1", torch::nn::Linear(d, d));
    head_fc2_ = register_module("head_fc2", torch::nn::Linear(d, d));
    heatmap_norm_ = register_module("heatmap_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d})));
    heatmap_head_ = register_module("heatmap_head", torch::nn::Linear(d, kHeatmapCells));
    gaze_branch_ = register_module("gaze_branch", GazeBranch(config_.conv_channels, d));
    if (config_.learnable_tau) {
        log_tau_ = register_parameter("log_tau", torch::full({1}, std::log(config_.tau)));
    }
}

GazeEstimate GazeEstimatorImpl::forward(const EmbeddingSequence& video_features) {
    const auto in = video_features.as_batch();
    if (in.d_model() != config_.d_in) {
        throw ShapeError("gaze estimator: expected d_in " + std::to_string(config_.d_in) + ", got " +
                         std::to_string(in.d_model()));
    }
    const auto b = in.data.size(0);
    const auto t = in.data.size(1);
    auto m = in.mask.to(in.data.dtype()).unsqueeze(-1);

    auto x = input_proj_(in.data);
    for (const auto& layer : *glu_layers_) x = layer->as<GluLayer>()->forward(x);
    auto h = attn_norm_(x);
    x = x + attention_(h, h, in.mask);

    auto emb = head_fc2_(torch::gelu(head_fc1_(x))) * m;
    auto logits = heatmap_head_(heatmap_norm_(x));
    auto maps = torch::softmax(logits, -1).view({b, t, kHeatmapSide, kHeatmapSide});

    GazeEstimate out{EmbeddingSequence(emb, in.mask), maps};
    if (!video_features.batched()) {
        out.embeddings = EmbeddingSequence(emb.squeeze(0), in.mask.squeeze(0));
        out.heatmaps = maps.squeeze(0);
    }
    return out;
}

EmbeddingSequence GazeEstimatorImpl::embed_heatmaps(const torch::Tensor& heatmaps, const torch::Tensor& mask) {
    if (heatmaps.numel() == 0 || heatmaps.size(-3) == 0) throw std::invalid_argument("gaze branch: empty heatmap sequence");
    if (heatmaps.size(-1) != kHeatmapSide || heatmaps.size(-2) != kHeatmapSide) {
        throw ShapeError("gaze branch: heatmaps must be [.., 64, 64]");
    }
    const bool batched = heatmaps.dim() == 4;
    auto maps = batched ? heatmaps : heatmaps.unsqueeze(0);
    auto m = mask.defined() ? (batched ? mask : mask.unsqueeze(0))
                            : torch::ones({maps.size(0), maps.size(1)}, torch::TensorOptions().dtype(torch::kBool));
    auto emb = gaze_branch_(maps, m);
    if (!batched) return {emb.squeeze(0), m.squeeze(0)};
    return {emb, m};
}

torch::Tensor GazeEstimatorImpl::temperature() const {
    if (log_tau_.defined()) return torch::exp(log_tau_).squeeze(0);
    return torch::tensor(config_.tau, torch::kFloat64);
}

std::vector<torch::Tensor> GazeEstimatorImpl::video_branch_parameters() const {
    std::vector<torch::Tensor> out;
    for (const auto& p : named_parameters(true)) {
        if (p.key().rfind("gaze_branch.", 0) != 0 && p.key() != "log_tau") out.push_back(p.value());
    }
    return out;
}

GazeEstimate gaze_estimator_forward(GazeEstimator& model, const EmbeddingSequence& video_features) {
    return model->forward(video_features);
}

EmbeddingSequence gaze_branch_forward(GazeEstimator& model, const torch::Tensor& heatmaps) {
    return model->embed_heatmaps(heatmaps);
}

}  // namespace gazenlq::gaze
