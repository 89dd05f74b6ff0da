#include "gazenlq/core/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>

namespace gazenlq {

namespace {

bool is_no_decay(const std::string& name, const torch::Tensor& p) {
    return p.dim() <= 1 || name.find("norm") != std::string::npos || name.ends_with("bias");
}

}  // namespace

std::unique_ptr<torch::optim::AdamW> make_adamw(const torch::nn::Module& module, double lr, double weight_decay) {
    std::vector<torch::Tensor> decay, no_decay;
    for (const auto& p : module.named_parameters(true)) {
        if (!p.value().requires_grad()) continue;
        (is_no_decay(p.key(), p.value()) ? no_decay : decay).push_back(p.value());
    }
    std::vector<torch::optim::OptimizerParamGroup> groups;
    if (!decay.empty()) {
        groups.emplace_back(decay, std::make_unique<torch::optim::AdamWOptions>(
                                       torch::optim::AdamWOptions(lr).weight_decay(weight_decay)));
    }
    if (!no_decay.empty()) {
        groups.emplace_back(no_decay,
                            std::make_unique<torch::optim::AdamWOptions>(torch::optim::AdamWOptions(lr).weight_decay(0.0)));
    }
    return std::make_unique<torch::optim::AdamW>(groups, torch::optim::AdamWOptions(lr));
}

double warmup_cosine(int64_t step, int64_t total_steps, int64_t warmup_steps) {
    if (total_steps <= 0) return 1.0;
    if (step < warmup_steps) return static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
    const auto decay_steps = std::max<int64_t>(1, total_steps - warmup_steps);
    const double progress = std::clamp(static_cast<double>(step - warmup_steps) / static_cast<double>(decay_steps), 0.0, 1.0);
    return 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void set_learning_rate(torch::optim::Optimizer& optimizer, double lr) {
    for (auto& group : optimizer.param_groups()) {
        static_cast<torch::optim::AdamWOptions&>(group.options()).lr(lr);
    }
}

std::vector<std::vector<size_t>> shuffled_batches(size_t n, size_t batch, std::mt19937_64& rng) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    // Fisher-Yates with our own index draw: std::shuffle's use of the engine is unspecified.
    for (size_t i = n; i > 1; --i) {
        const auto j = static_cast<size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    std::vector<std::vector<size_t>> out;
    for (size_t s = 0; s < n; s += batch) {
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, s + batch)));
    }
    return out;
}

bool bitwise_equal(const std::vector<std::pair<std::string, torch::Tensor>>& a,
                   const std::vector<std::pair<std::string, torch::Tensor>>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].first != b[i].first) return false;
        const auto& x = a[i].second;
        const auto& y = b[i].second;
        if (x.sizes() != y.sizes() || x.scalar_type() != y.scalar_type()) return false;
        auto xc = x.contiguous();
        auto yc = y.contiguous();
        if (std::memcmp(xc.data_ptr(), yc.data_ptr(), static_cast<size_t>(xc.nbytes())) != 0) return false;
    }
    return true;
}

}  // namespace gazenlq
