#pragma once

#include <torch/torch.h>

#include <string>
#include <vector>

#include "gazenlq/core/interval.hpp"

namespace gazenlq::grounding {

/// One (video, text query, ground-truth interval) unit.
struct QuerySample {
    std::string video_id;
    std::string annotation_uid;
    int64_t query_idx = 0;
    std::string query_text;
    torch::Tensor text_embeddings;  // [L, d_text]
    torch::Tensor video_features;   // [T, d_video], one row per window
    torch::Tensor gaze_features;    // [T, d_in] input of the gaze estimator; may be undefined
    Interval gt_interval;
    double seconds_per_window = 1.0;

    int64_t num_windows() const { return video_features.size(0); }
    double duration() const { return static_cast<double>(num_windows()) * seconds_per_window; }

    /// Throws std::invalid_argument unless 0 <= start < end <= T * spw and the
    /// tensors are well formed.
    void validate() const;
};

}  // namespace gazenlq::grounding
