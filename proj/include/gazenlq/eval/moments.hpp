#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "gazenlq/core/interval.hpp"
#include "gazenlq/grounding/model.hpp"

namespace gazenlq::eval {

/// A scored candidate interval.
struct MomentPrediction {
    double start_s = 0.0;
    double end_s = 0.0;
    double score = 0.0;

    Interval interval() const { return {start_s, end_s}; }
    bool operator==(const MomentPrediction&) const = default;
};

std::ostream& operator<<(std::ostream& os, const MomentPrediction& m);

/// Scored moments for batch element `batch_index`. A location emits
/// (c - left * u, c + right * u) with u = stride * spw when
/// sigmoid(logit) >= score_threshold; intervals are clipped to
/// [0, video_end_s] and dropped if empty. Each level keeps its top
/// `max_per_level` by score. Output is sorted by score, descending.
std::vector<MomentPrediction> decode_moments(const grounding::FeaturePyramid& pyramid, int64_t batch_index,
                                             double seconds_per_window, double video_end_s, double score_threshold,
                                             int64_t max_per_level);

enum class SoftNmsMethod { gaussian, linear };

std::string to_string(SoftNmsMethod method);
SoftNmsMethod parse_soft_nms_method(const std::string& s);

struct SoftNmsOptions {
    SoftNmsMethod method = SoftNmsMethod::gaussian;
    double sigma = 0.5;
    double score_floor = 0.001;
    /// Linear decay applies only above this IoU.
    double linear_overlap = 0.3;

    void validate() const;
};

/// Repeatedly selects the highest-scoring remaining moment and decays the
/// others: gaussian s * exp(-IoU^2 / sigma), linear s * (1 - IoU) when
/// IoU > linear_overlap. Moments below score_floor are dropped. Intervals are
/// never modified; output is in selection order (score descending).
std::vector<MomentPrediction> soft_nms(std::vector<MomentPrediction> moments, const SoftNmsOptions& options = {});

}  // namespace gazenlq::eval
