#pragma once

#include <torch/torch.h>

#include "gazenlq/core/sequence.hpp"

namespace gazenlq::nn {

/// Multi-head scaled dot-product attention with a key padding mask.
///
/// Query rows whose keys are all masked receive a zero output instead of NaN,
/// so a fully masked context contributes nothing.
class MultiHeadAttentionImpl : public torch::nn::Module {
public:
    MultiHeadAttentionImpl(int64_t d_model, int64_t n_heads);

    /// query: [B, Tq, d]; key_value: [B, Tk, d]; key_mask: [B, Tk] bool.
    torch::Tensor forward(const torch::Tensor& query, const torch::Tensor& key_value, const torch::Tensor& key_mask);

    torch::nn::Linear q_proj{nullptr}, k_proj{nullptr}, v_proj{nullptr}, out_proj{nullptr};

private:
    int64_t d_model_;
    int64_t n_heads_;
};
TORCH_MODULE(MultiHeadAttention);

/// Pre-norm residual cross-attention: out = x + MHA(LN(x), LN(ctx)).
class CrossAttentionBlockImpl : public torch::nn::Module {
public:
    CrossAttentionBlockImpl(int64_t d_model, int64_t n_heads);

    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& context, const torch::Tensor& context_mask);

    torch::nn::LayerNorm norm_query{nullptr}, norm_context{nullptr};
    MultiHeadAttention attention{nullptr};
};
TORCH_MODULE(CrossAttentionBlock);

/// Pre-norm transformer encoder block (masked self-attention + GELU MLP).
class TransformerBlockImpl : public torch::nn::Module {
public:
    TransformerBlockImpl(int64_t d_model, int64_t n_heads, int64_t mlp_ratio = 2);

    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& mask);

    torch::nn::LayerNorm norm_attn{nullptr}, norm_mlp{nullptr};
    MultiHeadAttention attention{nullptr};
    torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(TransformerBlock);

/// Fixed sinusoidal position table [length, d_model].
torch::Tensor sinusoidal_positions(int64_t length, int64_t d_model, torch::Dtype dtype = torch::kFloat32);

}  // namespace gazenlq::nn
