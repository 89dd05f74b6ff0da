#include "gazenlq/grounding/targets.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gazenlq::grounding {

PyramidLayout PyramidLayout::of(const FeaturePyramid& pyramid) { return {pyramid.lengths(), pyramid.strides()}; }

PyramidLayout PyramidLayout::for_length(int64_t t, int64_t n_levels) {
    PyramidLayout layout;
    layout.lengths = pyramid_lengths(t, n_levels);
    for (int64_t l = 0; l < n_levels; ++l) layout.strides.push_back(int64_t{1} << l);
    return layout;
}

int64_t PyramidLayout::total() const {
    int64_t n = 0;
    for (auto l : lengths) n += l;
    return n;
}

int64_t LocationTargets::num_positive() const {
    int64_t n = 0;
    for (auto p : positive) n += p;
    return n;
}

std::pair<double, double> level_length_range(int64_t level, int64_t n_levels) {
    const double lo = level == 0 ? 0.0 : std::ldexp(1.0, static_cast<int>(level));
    const double hi = level == n_levels - 1 ? std::numeric_limits<double>::infinity()
                                            : std::ldexp(1.0, static_cast<int>(level) + 1);
    return {lo, hi};
}

LocationTargets assign_targets(const Interval& gt, double seconds_per_window, const PyramidLayout& layout,
                               int64_t valid_windows) {
    if (!gt.valid() || gt.start < 0.0) throw std::invalid_argument("assign_targets: need 0 <= start < end");
    if (!(seconds_per_window > 0.0)) throw std::invalid_argument("assign_targets: seconds_per_window must be > 0");
    if (layout.lengths.empty() || layout.lengths.size() != layout.strides.size()) {
        throw std::invalid_argument("assign_targets: malformed pyramid layout");
    }
    const auto n_levels = static_cast<int64_t>(layout.lengths.size());
    if (valid_windows < 0) valid_windows = layout.lengths.front();

    LocationTargets out;
    const auto total = static_cast<size_t>(layout.total());
    out.positive.assign(total, 0);
    out.left.assign(total, 0.0);
    out.right.assign(total, 0.0);
    out.center_s.assign(total, 0.0);
    out.unit_s.assign(total, 0.0);

    const double length_windows = gt.length() / seconds_per_window;
    int64_t chosen_level = n_levels - 1;
    for (int64_t l = 0; l < n_levels; ++l) {
        const auto [lo, hi] = level_length_range(l, n_levels);
        if (length_windows >= lo && length_windows < hi) {
            chosen_level = l;
            break;
        }
    }

    size_t offset = 0;
    size_t chosen_offset = 0;
    int64_t chosen_valid = 0;
    int64_t valid_l = valid_windows;
    for (int64_t l = 0; l < n_levels; ++l) {
        const auto len = layout.lengths[static_cast<size_t>(l)];
        const double unit = static_cast<double>(layout.strides[static_cast<size_t>(l)]) * seconds_per_window;
        for (int64_t t = 0; t < len; ++t) {
            const auto i = offset + static_cast<size_t>(t);
            const double c = (static_cast<double>(t) + 0.5) * unit;
            out.center_s[i] = c;
            out.unit_s[i] = unit;
            out.left[i] = (c - gt.start) / unit;
            out.right[i] = (gt.end - c) / unit;
            if (l == chosen_level && t < valid_l && c >= gt.start && c <= gt.end) out.positive[i] = 1;
        }
        if (l == chosen_level) {
            chosen_offset = offset;
            chosen_valid = std::min(valid_l, len);
        }
        offset += static_cast<size_t>(len);
        valid_l = (valid_l + 1) / 2;
    }

    if (out.num_positive() == 0) {
        // Nearest-center fallback on the level that owns this length.
        out.used_fallback = true;
        const double mid = gt.midpoint();
        size_t best = chosen_offset;
        double best_dist = std::numeric_limits<double>::infinity();
        for (int64_t t = 0; t < std::max<int64_t>(chosen_valid, 1); ++t) {
            const auto i = chosen_offset + static_cast<size_t>(t);
            const double dist = std::abs(out.center_s[i] - mid);
            if (dist < best_dist) {
                best_dist = dist;
                best = i;
            }
        }
        out.positive[best] = 1;
    }
    return out;
}

LocationTargets assign_targets(const QuerySample& sample, const FeaturePyramid& pyramid) {
    sample.validate();
    return assign_targets(sample.gt_interval, sample.seconds_per_window, PyramidLayout::of(pyramid),
                          sample.num_windows());
}

std::vector<Interval> decode_targets(const LocationTargets& targets) {
    std::vector<Interval> out;
    for (size_t i = 0; i < targets.positive.size(); ++i) {
        if (!targets.positive[i]) continue;
        const double c = targets.center_s[i];
        const double u = targets.unit_s[i];
        out.push_back({c - targets.left[i] * u, c + targets.right[i] * u});
    }
    return out;
}

BatchTargets stack_targets(const std::vector<LocationTargets>& targets, torch::Dtype dtype) {
    if (targets.empty()) throw std::invalid_argument("stack_targets: empty batch");
    const auto b = static_cast<int64_t>(targets.size());
    const auto n = static_cast<int64_t>(targets.front().positive.size());
    auto labels = torch::zeros({b, n}, torch::kFloat64);
    auto offsets = torch::zeros({b, n, 2}, torch::kFloat64);
    auto la = labels.accessor<double, 2>();
    auto oa = offsets.accessor<double, 3>();
    for (int64_t i = 0; i < b; ++i) {
        const auto& t = targets[static_cast<size_t>(i)];
        if (static_cast<int64_t>(t.positive.size()) != n) throw ShapeError("stack_targets: ragged pyramid layouts");
        for (int64_t j = 0; j < n; ++j) {
            la[i][j] = t.positive[static_cast<size_t>(j)];
            oa[i][j][0] = t.left[static_cast<size_t>(j)];
            oa[i][j][1] = t.right[static_cast<size_t>(j)];
        }
    }
    return {labels.to(dtype), offsets.to(dtype)};
}

}  // namespace gazenlq::grounding
