#include "doctest_torch.hpp"

#include <random>

#include "gazenlq/eval/recall.hpp"
#include "oracles.hpp"

using namespace gazenlq;
using namespace gazenlq::eval;

namespace {

QueryKey key(int i) { return {"clip" + std::to_string(i), "ann" + std::to_string(i), 0}; }

/// A prediction with the requested IoU against (0, 10): (0, 10 * iou).
MomentPrediction with_iou(double iou, double score = 0.9) { return {0.0, 10.0 * iou, score}; }

}  // namespace

TEST_CASE("perfect predictions score 100 everywhere") {
    GroundTruth gt{{key(0), {1, 3}}, {key(1), {4, 9}}};
    RankedPredictions p{{key(0), {{1, 3, 0.9}}}, {key(1), {{4, 9, 0.8}}}};
    auto r = evaluate(p, gt);
    CHECK(r.r1_03 == 100.0);
    CHECK(r.r1_05 == 100.0);
    CHECK(r.r5_03 == 100.0);
    CHECK(r.r5_05 == 100.0);
    CHECK(r.n_queries == 2);
}

TEST_CASE("single query at IoU 0.4") {
    GroundTruth gt{{key(0), {0, 10}}};
    RankedPredictions p{{key(0), {with_iou(0.4)}}};
    CHECK(recall_at_k(p, gt, 1, 0.3) == 100.0);
    CHECK(recall_at_k(p, gt, 1, 0.5) == 0.0);
}

TEST_CASE("four-query example") {
    GroundTruth gt;
    RankedPredictions p;
    const double top1[] = {0.6, 0.4, 0.2, 0.0};
    for (int i = 0; i < 4; ++i) {
        gt[key(i)] = {0, 10};
        p[key(i)] = {top1[i] > 0 ? with_iou(top1[i]) : MomentPrediction{20, 30, 0.9}};
    }
    p[key(1)].push_back(with_iou(0.7, 0.5));
    CHECK(recall_at_k(p, gt, 1, 0.5) == 25.0);
    CHECK(recall_at_k(p, gt, 5, 0.5) == 50.0);
}

TEST_CASE("missing predictions count as misses; empty ground truth is zero") {
    GroundTruth gt{{key(0), {0, 10}}, {key(1), {0, 10}}};
    RankedPredictions p{{key(0), {with_iou(1.0)}}};
    CHECK(recall_at_k(p, gt, 1, 0.5) == 50.0);
    CHECK(recall_at_k(p, {}, 1, 0.5) == 0.0);
    CHECK(evaluate({}, gt).r5_03 == 0.0);
    CHECK_THROWS(recall_at_k(p, gt, 0, 0.5));
}

TEST_CASE("recall matches the naive oracle and is monotone") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 30.0), len(0.5, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        GroundTruth gt;
        RankedPredictions p;
        const int n = 1 + static_cast<int>(rng() % 16);
        for (int q = 0; q < n; ++q) {
            const double s = u(rng);
            gt[key(q)] = {s, s + len(rng)};
            const int m = static_cast<int>(rng() % 7);
            if (m == 6) continue;
            for (int j = 0; j < m; ++j) {
                const double a = u(rng);
                p[key(q)].push_back({a, a + len(rng), 1.0 - 0.1 * j});
            }
        }
        for (int k : {1, 5}) {
            for (double theta : {0.3, 0.5}) {
                CHECK(recall_at_k(p, gt, k, theta) == doctest::Approx(oracle::recall(p, gt, k, theta)));
            }
        }
        CHECK(recall_at_k(p, gt, 1, 0.3) <= recall_at_k(p, gt, 5, 0.3));
        CHECK(recall_at_k(p, gt, 1, 0.5) <= recall_at_k(p, gt, 1, 0.3));
    }
}

TEST_CASE("metrics CSV layout") {
    EvalResult r{25.0, 12.5, 50.0, 37.5, 8};
    CHECK(metrics_csv(r) == "metric,value\nr1@0.3,25.00\nr1@0.5,12.50\nr5@0.3,50.00\nr5@0.5,37.50\n");
}
