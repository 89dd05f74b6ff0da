#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gazenlq/core/interval.hpp"
#include "gazenlq/eval/moments.hpp"

namespace gazenlq::eval {

/// Identity of one query in the prediction-file schema.
struct QueryKey {
    std::string clip_uid;
    std::string annotation_uid;
    int64_t query_idx = 0;

    auto operator<=>(const QueryKey&) const = default;
    std::string str() const;
};

using RankedPredictions = std::map<QueryKey, std::vector<MomentPrediction>>;
using GroundTruth = std::map<QueryKey, Interval>;

/// Percentage of ground-truth queries whose top-k predictions contain one
/// with IoU >= theta. Queries without predictions count as misses; empty
/// ground truth gives 0.
double recall_at_k(const RankedPredictions& predictions, const GroundTruth& gts, int64_t k, double theta);

struct EvalResult {
    double r1_03 = 0.0;
    double r1_05 = 0.0;
    double r5_03 = 0.0;
    double r5_05 = 0.0;
    int64_t n_queries = 0;
};

/// The four R{1,5}@IoU{0.3,0.5} settings.
EvalResult evaluate(const RankedPredictions& predictions, const GroundTruth& gts);

/// `metric,value` CSV with rows r1@0.3, r1@0.5, r5@0.3, r5@0.5.
std::string metrics_csv(const EvalResult& result);

}  // namespace gazenlq::eval
