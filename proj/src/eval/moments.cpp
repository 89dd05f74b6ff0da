#include "gazenlq/eval/moments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gazenlq::eval {

std::ostream& operator<<(std::ostream& os, const MomentPrediction& m) {
    return os << '[' << m.start_s << ", " << m.end_s << ", " << m.score << ']';
}

namespace {

bool by_score_desc(const MomentPrediction& a, const MomentPrediction& b) { return a.score > b.score; }

}  // namespace

std::vector<MomentPrediction> decode_moments(const grounding::FeaturePyramid& pyramid, int64_t batch_index,
                                             double seconds_per_window, double video_end_s, double score_threshold,
                                             int64_t max_per_level) {
    std::vector<MomentPrediction> out;
    for (const auto& level : pyramid.levels) {
        auto logits = level.cls_logits[batch_index].detach().to(torch::kCPU, torch::kFloat64).contiguous();
        auto offsets = level.reg_offsets[batch_index].detach().to(torch::kCPU, torch::kFloat64).contiguous();
        auto la = logits.accessor<double, 1>();
        auto oa = offsets.accessor<double, 2>();
        const double unit = static_cast<double>(level.stride) * seconds_per_window;

        std::vector<MomentPrediction> level_moments;
        for (int64_t t = 0; t < logits.size(0); ++t) {
            const double logit = la[t];
            if (std::isinf(logit) && logit < 0) continue;
            const double score = 1.0 / (1.0 + std::exp(-logit));
            if (score < score_threshold) continue;
            const double c = (static_cast<double>(t) + 0.5) * unit;
            const double start = std::max(0.0, c - oa[t][0] * unit);
            const double end = std::min(video_end_s, c + oa[t][1] * unit);
            if (!(start < end)) continue;
            level_moments.push_back({start, end, score});
        }
        std::stable_sort(level_moments.begin(), level_moments.end(), by_score_desc);
        if (max_per_level >= 0 && static_cast<int64_t>(level_moments.size()) > max_per_level) {
            level_moments.resize(static_cast<size_t>(max_per_level));
        }
        out.insert(out.end(), level_moments.begin(), level_moments.end());
    }
    std::stable_sort(out.begin(), out.end(), by_score_desc);
    return out;
}

std::string to_string(SoftNmsMethod method) { return method == SoftNmsMethod::gaussian ? "gaussian" : "linear"; }

SoftNmsMethod parse_soft_nms_method(const std::string& s) {
    if (s == "gaussian") return SoftNmsMethod::gaussian;
    if (s == "linear") return SoftNmsMethod::linear;
    throw std::invalid_argument("soft-nms method must be gaussian or linear (got '" + s + "')");
}

void SoftNmsOptions::validate() const {
    if (method == SoftNmsMethod::gaussian && !(sigma > 0.0)) throw std::invalid_argument("soft_nms: sigma must be > 0");
    if (!(score_floor >= 0.0)) throw std::invalid_argument("soft_nms: score_floor must be >= 0");
    if (!(linear_overlap >= 0.0 && linear_overlap <= 1.0)) {
        throw std::invalid_argument("soft_nms: linear_overlap must be in [0, 1]");
    }
}

std::vector<MomentPrediction> soft_nms(std::vector<MomentPrediction> moments, const SoftNmsOptions& options) {
    options.validate();
    std::vector<MomentPrediction> kept;
    kept.reserve(moments.size());
    while (!moments.empty()) {
        // First maximum wins ties, keeping the result order deterministic.
        auto best = std::max_element(moments.begin(), moments.end(),
                                     [](const auto& a, const auto& b) { return a.score < b.score; });
        const auto selected = *best;
        moments.erase(best);
        if (selected.score < options.score_floor) continue;
        kept.push_back(selected);

        for (auto& m : moments) {
            const double iou = temporal_iou(selected.interval(), m.interval());
            if (options.method == SoftNmsMethod::gaussian) {
                m.score *= std::exp(-(iou * iou) / options.sigma);
            } else if (iou > options.linear_overlap) {
                m.score *= 1.0 - iou;
            }
        }
        std::erase_if(moments, [&](const auto& m) { return m.score < options.score_floor; });
    }
    return kept;
}

}  // namespace gazenlq::eval
