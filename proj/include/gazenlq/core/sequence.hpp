#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <stdexcept>

namespace gazenlq {

/// Tensor shape or feature width does not match what a module expects.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A (possibly batched) sequence of d-dimensional vectors plus a validity mask.
///
/// `data` is [T, d] or [B, T, d]; `mask` is the matching [T] / [B, T] bool
/// tensor, true at valid positions. Masked rows never contribute to attention
/// or loss terms.
struct EmbeddingSequence {
    torch::Tensor data;
    torch::Tensor mask;

    EmbeddingSequence() = default;
    EmbeddingSequence(torch::Tensor data_, torch::Tensor mask_);

    /// All positions valid.
    static EmbeddingSequence dense(torch::Tensor data);

    int64_t length() const { return data.size(-2); }
    int64_t d_model() const { return data.size(-1); }
    bool batched() const { return data.dim() == 3; }

    /// Adds a leading batch axis when the sequence is unbatched.
    EmbeddingSequence as_batch() const;

    /// Rows at valid positions, flattened to [N, d].
    torch::Tensor valid_rows() const;
};

/// Pads sequences of varying length into one [B, T_max, d] batch.
EmbeddingSequence pad_batch(const std::vector<torch::Tensor>& rows);

}  // namespace gazenlq
