#include "gazenlq/core/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace gazenlq::nn {

MultiHeadAttentionImpl::MultiHeadAttentionImpl(int64_t d_model, int64_t n_heads)
    : d_model_(d_model), n_heads_(n_heads) {
    if (n_heads <= 0 || d_model % n_heads != 0) {
        throw std::invalid_argument("MultiHeadAttention: d_model must be divisible by n_heads");
    }
    q_proj = register_module("q_proj", torch::nn::Linear(d_model, d_model));
    k_proj = register_module("k_proj", torch::nn::Linear(d_model, d_model));
    v_proj = register_module("v_proj", torch::nn::Linear(d_model, d_model));
    out_proj = register_module("out_proj", torch::nn::Linear(d_model, d_model));
}

torch::Tensor MultiHeadAttentionImpl::forward(const torch::Tensor& query, const torch::Tensor& key_value,
                                              const torch::Tensor& key_mask) {
    if (query.size(-1) != d_model_ || key_value.size(-1) != d_model_) {
        throw ShapeError("MultiHeadAttention: feature width " + std::to_string(query.size(-1)) + "/" +
                                    std::to_string(key_value.size(-1)) + " != d_model " + std::to_string(d_model_));
    }
    const auto b = query.size(0);
    const auto tq = query.size(1);
    const auto tk = key_value.size(1);
    const auto dh = d_model_ / n_heads_;

    auto split = [&](const torch::Tensor& x, int64_t t) { return x.view({b, t, n_heads_, dh}).transpose(1, 2); };
    auto q = split(q_proj(query), tq);
    auto k = split(k_proj(key_value), tk);
    auto v = split(v_proj(key_value), tk);

    auto scores = torch::matmul(q, k.transpose(-2, -1)) / std::sqrt(static_cast<double>(dh));
    auto km = key_mask.view({b, 1, 1, tk});
    // Finite fill keeps gradients finite when a whole row is masked.
    scores = scores.masked_fill(km.logical_not(), -1e9);
    auto weights = torch::softmax(scores, -1);
    auto any_valid = key_mask.any(-1).view({b, 1, 1, 1});
    weights = weights * any_valid.to(weights.dtype());

    auto ctx = torch::matmul(weights, v).transpose(1, 2).reshape({b, tq, d_model_});
    auto out = out_proj(ctx);
    // No valid key means no attention output at all (bias included).
    return out * any_valid.view({b, 1, 1}).to(out.dtype());
}

CrossAttentionBlockImpl::CrossAttentionBlockImpl(int64_t d_model, int64_t n_heads) {
    norm_query = register_module("norm_query", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d_model})));
    norm_context = register_module("norm_context", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d_model})));
    attention = register_module("attention", MultiHeadAttention(d_model, n_heads));
}

torch::Tensor CrossAttentionBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& context,
                                               const torch::Tensor& context_mask) {
    return x + attention(norm_query(x), norm_context(context), context_mask);
}

TransformerBlockImpl::TransformerBlockImpl(int64_t d_model, int64_t n_heads, int64_t mlp_ratio) {
    norm_attn = register_module("norm_attn", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d_model})));
    norm_mlp = register_module("norm_mlp", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d_model})));
    attention = register_module("attention", MultiHeadAttention(d_model, n_heads));
    fc1 = register_module("fc1", torch::nn::Linear(d_model, d_model * mlp_ratio));
    fc2 = register_module("fc2", torch::nn::Linear(d_model * mlp_ratio, d_model));
}

torch::Tensor TransformerBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& mask) {
    auto h = norm_attn(x);
    auto y = x + attention(h, h, mask);
    y = y + fc2(torch::gelu(fc1(norm_mlp(y))));
    return y * mask.unsqueeze(-1).to(y.dtype());
}

torch::Tensor sinusoidal_positions(int64_t length, int64_t d_model, torch::Dtype dtype) {
    auto pos = torch::arange(length, torch::TensorOptions().dtype(torch::kFloat64)).unsqueeze(1);
    auto i = torch::arange(0, d_model, 2, torch::TensorOptions().dtype(torch::kFloat64));
    auto freq = torch::exp(i * (-std::log(10000.0) / static_cast<double>(d_model)));
    auto table = torch::zeros({length, d_model}, torch::TensorOptions().dtype(torch::kFloat64));
    using torch::indexing::Slice;
    table.index_put_({Slice(), Slice(0, torch::indexing::None, 2)}, torch::sin(pos * freq));
    table.index_put_({Slice(), Slice(1, torch::indexing::None, 2)}, torch::cos(pos * freq).narrow(1, 0, d_model / 2));
    return table.to(dtype);
}

}  // namespace gazenlq::nn
