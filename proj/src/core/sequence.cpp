#include "gazenlq/core/sequence.hpp"

#include <stdexcept>

namespace gazenlq {

EmbeddingSequence::EmbeddingSequence(torch::Tensor data_, torch::Tensor mask_)
    : data(std::move(data_)), mask(std::move(mask_)) {
    if (data.dim() != 2 && data.dim() != 3) {
        throw std::invalid_argument("EmbeddingSequence: data must be [T, d] or [B, T, d]");
    }
    if (mask.dim() != data.dim() - 1) {
        throw std::invalid_argument("EmbeddingSequence: mask rank does not match data");
    }
    for (int64_t i = 0; i < mask.dim(); ++i) {
        if (mask.size(i) != data.size(i)) {
            throw std::invalid_argument("EmbeddingSequence: mask length does not match data");
        }
    }
    if (mask.scalar_type() != torch::kBool) mask = mask.to(torch::kBool);
}

EmbeddingSequence EmbeddingSequence::dense(torch::Tensor data) {
    auto sizes = data.sizes().vec();
    sizes.pop_back();
    auto mask = torch::ones(sizes, torch::TensorOptions().dtype(torch::kBool).device(data.device()));
    return {std::move(data), std::move(mask)};
}

EmbeddingSequence EmbeddingSequence::as_batch() const {
    if (batched()) return *this;
    return {data.unsqueeze(0), mask.unsqueeze(0)};
}

torch::Tensor EmbeddingSequence::valid_rows() const {
    return data.reshape({-1, d_model()}).index({mask.reshape({-1})});
}

EmbeddingSequence pad_batch(const std::vector<torch::Tensor>& rows) {
    if (rows.empty()) throw std::invalid_argument("pad_batch: empty batch");
    int64_t t_max = 0;
    const int64_t d = rows.front().size(1);
    for (const auto& r : rows) {
        if (r.dim() != 2 || r.size(1) != d) throw std::invalid_argument("pad_batch: ragged feature width");
        t_max = std::max(t_max, r.size(0));
    }
    const auto b = static_cast<int64_t>(rows.size());
    auto data = torch::zeros({b, t_max, d}, rows.front().options());
    auto mask = torch::zeros({b, t_max}, torch::TensorOptions().dtype(torch::kBool));
    for (int64_t i = 0; i < b; ++i) {
        const auto t = rows[static_cast<size_t>(i)].size(0);
        data[i].narrow(0, 0, t).copy_(rows[static_cast<size_t>(i)]);
        mask[i].narrow(0, 0, t).fill_(true);
    }
    return {data, mask};
}

}  // namespace gazenlq
