#pragma once

#include <vector>

#include "gazenlq/eval/moments.hpp"
#include "gazenlq/eval/prediction_file.hpp"
#include "gazenlq/eval/recall.hpp"
#include "gazenlq/grounding/model.hpp"
#include "gazenlq/grounding/sample.hpp"

namespace gazenlq::eval {

struct PredictOptions {
    int64_t batch = 8;
    double score_threshold = 0.0;
    int64_t max_per_level = -1;  // -1 keeps every location
    SoftNmsOptions nms;
    int64_t top_k = kMaxPredictionsPerQuery;
};

/// Decodes, Soft-NMS merges and truncates the model's moments for every sample,
/// in sample order.
PredictionFile predict(grounding::GroundingModel& model, const std::vector<grounding::QuerySample>& samples,
                       const PredictOptions& options = {});

QueryKey query_key(const grounding::QuerySample& sample);
GroundTruth ground_truth(const std::vector<grounding::QuerySample>& samples);

}  // namespace gazenlq::eval
