#include "gazenlq/grounding/sample.hpp"

#include <stdexcept>

namespace gazenlq::grounding {

void QuerySample::validate() const {
    auto fail = [&](const std::string& why) { throw std::invalid_argument("sample '" + video_id + "': " + why); };
    if (!(seconds_per_window > 0.0)) fail("seconds_per_window must be > 0");
    if (!video_features.defined() || video_features.dim() != 2 || video_features.size(0) < 1) {
        fail("video_features must be [T >= 1, d]");
    }
    if (!text_embeddings.defined() || text_embeddings.dim() != 2 || text_embeddings.size(0) < 1) {
        fail("text_embeddings must be [L >= 1, d]");
    }
    if (gaze_features.defined() && (gaze_features.dim() != 2 || gaze_features.size(0) != video_features.size(0))) {
        fail("gaze_features must be [T, d_in] with the same T as video_features");
    }
    if (!(gt_interval.start >= 0.0) || !(gt_interval.start < gt_interval.end)) fail("need 0 <= start < end");
    if (gt_interval.end > duration() + 1e-9) fail("gt interval ends after the video");
}

}  // namespace gazenlq::grounding
