#pragma once

#include <torch/torch.h>

#include <memory>
#include <random>
#include <vector>

namespace gazenlq {

/// AdamW over `module`'s trainable parameters. LayerNorm weights and all
/// biases are placed in a group without weight decay.
std::unique_ptr<torch::optim::AdamW> make_adamw(const torch::nn::Module& module, double lr, double weight_decay);

/// Learning-rate multiplier: linear warm-up over `warmup_steps`, then cosine
/// decay to zero at `total_steps`.
double warmup_cosine(int64_t step, int64_t total_steps, int64_t warmup_steps);

void set_learning_rate(torch::optim::Optimizer& optimizer, double lr);

/// Deterministic mini-batch order for one epoch.
std::vector<std::vector<size_t>> shuffled_batches(size_t n, size_t batch, std::mt19937_64& rng);

/// Bitwise comparison of two parameter snapshots.
bool bitwise_equal(const std::vector<std::pair<std::string, torch::Tensor>>& a,
                   const std::vector<std::pair<std::string, torch::Tensor>>& b);

}  // namespace gazenlq
