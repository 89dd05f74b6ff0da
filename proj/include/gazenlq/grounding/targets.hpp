#pragma once

#include <torch/torch.h>

#include <vector>

#include "gazenlq/core/interval.hpp"
#include "gazenlq/grounding/model.hpp"
#include "gazenlq/grounding/sample.hpp"

namespace gazenlq::grounding {

/// Shape of a pyramid without its tensors.
struct PyramidLayout {
    std::vector<int64_t> lengths;
    std::vector<int64_t> strides;

    static PyramidLayout of(const FeaturePyramid& pyramid);
    /// Layout for a base sequence of `t` windows with ceil-halving levels.
    static PyramidLayout for_length(int64_t t, int64_t n_levels);
    int64_t total() const;
};

/// Per-location labels for one sample, levels concatenated in order.
struct LocationTargets {
    std::vector<uint8_t> positive;
    /// (c - start, end - c) in level-stride time units; meaningful only at positives.
    std::vector<double> left;
    std::vector<double> right;
    std::vector<double> center_s;     // location center in seconds
    std::vector<double> unit_s;       // seconds per level-stride unit
    bool used_fallback = false;

    int64_t num_positive() const;
};

/// Base-window length range [lo, hi) handled by `level` out of `n_levels`:
/// [2^l, 2^{l+1}), with the first level open below and the last open above.
std::pair<double, double> level_length_range(int64_t level, int64_t n_levels);

/// Anchor-free assignment. Location (l, t) has center
/// c = (t + 0.5) * stride_l * spw and is positive when c lies in the interval
/// and the interval length (in base windows) falls in level l's range. If
/// nothing matches, the location of that level whose center is nearest the
/// interval midpoint becomes the single positive.
/// `valid_windows` is the sample's unpadded length (defaults to lengths[0]).
LocationTargets assign_targets(const Interval& gt, double seconds_per_window, const PyramidLayout& layout,
                               int64_t valid_windows = -1);
LocationTargets assign_targets(const QuerySample& sample, const FeaturePyramid& pyramid);

/// Decodes positives back to intervals: (c - left * unit, c + right * unit).
std::vector<Interval> decode_targets(const LocationTargets& targets);

/// Stacked targets for a batch: labels [B, N] float, offsets [B, N, 2].
struct BatchTargets {
    torch::Tensor labels;
    torch::Tensor offsets;
};
BatchTargets stack_targets(const std::vector<LocationTargets>& targets, torch::Dtype dtype = torch::kFloat32);

}  // namespace gazenlq::grounding
