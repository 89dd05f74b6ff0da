#include "gazenlq/eval/predict.hpp"

#include <stdexcept>

#include "gazenlq/grounding/finetune.hpp"

namespace gazenlq::eval {

QueryKey query_key(const grounding::QuerySample& sample) {
    return {sample.video_id, sample.annotation_uid.empty() ? sample.video_id : sample.annotation_uid, sample.query_idx};
}

GroundTruth ground_truth(const std::vector<grounding::QuerySample>& samples) {
    GroundTruth out;
    for (const auto& s : samples) out[query_key(s)] = s.gt_interval;
    return out;
}

PredictionFile predict(grounding::GroundingModel& model, const std::vector<grounding::QuerySample>& samples,
                       const PredictOptions& options) {
    if (options.batch < 1 || options.top_k < 1) throw std::invalid_argument("predict: batch and top_k must be >= 1");
    torch::NoGradGuard no_grad;
    model->eval();
    const bool uses_gaze = model->config().gaze_mode != grounding::GazeMode::off;
    PredictionFile out;
    for (size_t start = 0; start < samples.size(); start += static_cast<size_t>(options.batch)) {
        std::vector<size_t> idx;
        for (size_t i = start; i < std::min(samples.size(), start + static_cast<size_t>(options.batch)); ++i) {
            idx.push_back(i);
        }
        auto tb = grounding::collate_grounding_batch(samples, idx, model->config().n_pyramid_levels);
        if (!uses_gaze) tb.inputs.gaze_features = {};
        auto pyramid = model->forward(tb.inputs);
        for (size_t b = 0; b < idx.size(); ++b) {
            const auto& s = samples[idx[b]];
            auto moments = decode_moments(pyramid, static_cast<int64_t>(b), s.seconds_per_window, s.duration(),
                                          options.score_threshold, options.max_per_level);
            moments = soft_nms(std::move(moments), options.nms);
            if (static_cast<int64_t>(moments.size()) > options.top_k) moments.resize(static_cast<size_t>(options.top_k));
            out.results.push_back({query_key(s), std::move(moments)});
        }
    }
    return out;
}

}  // namespace gazenlq::eval
