#include "gazenlq/eval/recall.hpp"

#include <cstdio>
#include <stdexcept>

namespace gazenlq::eval {

std::string QueryKey::str() const { return clip_uid + "/" + annotation_uid + "/" + std::to_string(query_idx); }

double recall_at_k(const RankedPredictions& predictions, const GroundTruth& gts, int64_t k, double theta) {
    if (k < 1) throw std::invalid_argument("recall_at_k: k must be >= 1");
    if (gts.empty()) return 0.0;
    int64_t hits = 0;
    for (const auto& [key, gt] : gts) {
        const auto it = predictions.find(key);
        if (it == predictions.end()) continue;
        const auto& ranked = it->second;
        const auto n = std::min<size_t>(ranked.size(), static_cast<size_t>(k));
        for (size_t i = 0; i < n; ++i) {
            if (temporal_iou(ranked[i].interval(), gt) >= theta) {
                ++hits;
                break;
            }
        }
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(gts.size());
}

EvalResult evaluate(const RankedPredictions& predictions, const GroundTruth& gts) {
    return {recall_at_k(predictions, gts, 1, 0.3), recall_at_k(predictions, gts, 1, 0.5),
            recall_at_k(predictions, gts, 5, 0.3), recall_at_k(predictions, gts, 5, 0.5),
            static_cast<int64_t>(gts.size())};
}

std::string metrics_csv(const EvalResult& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "metric,value\nr1@0.3,%.2f\nr1@0.5,%.2f\nr5@0.3,%.2f\nr5@0.5,%.2f\n", r.r1_03,
                  r.r1_05, r.r5_03, r.r5_05);
    return buf;
}

}  // namespace gazenlq::eval
