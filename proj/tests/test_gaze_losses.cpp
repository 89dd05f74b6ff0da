#include "doctest_torch.hpp"

#include <cmath>

#include "gazenlq/gaze/losses.hpp"
#include "oracles.hpp"

using namespace gazenlq;
using namespace gazenlq::gaze;

namespace {

EmbeddingSequence seq(const torch::Tensor& t) { return EmbeddingSequence::dense(t); }

oracle::Matrix to_matrix(const torch::Tensor& t) {
    auto c = t.to(torch::kFloat64).contiguous();
    oracle::Matrix m(static_cast<size_t>(c.size(0)), std::vector<double>(static_cast<size_t>(c.size(1))));
    for (int64_t i = 0; i < c.size(0); ++i) {
        for (int64_t j = 0; j < c.size(1); ++j) m[i][j] = c[i][j].item<double>();
    }
    return m;
}

std::vector<double> flat(const torch::Tensor& t) {
    auto c = t.to(torch::kFloat64).contiguous().view(-1);
    return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

}  // namespace

TEST_CASE("InfoNCE of a single pair is zero") {
    auto v = torch::randn({1, 8});
    CHECK(info_nce_loss(seq(v), seq(torch::randn({1, 8})), 0.07).item<double>() == 0.0);
}

TEST_CASE("InfoNCE on orthogonal unit pairs") {
    auto e = torch::eye(2);
    const double expected = 2.0 * -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
    CHECK(expected == doctest::Approx(0.62652).epsilon(1e-4));
    CHECK(info_nce_loss(seq(e), seq(e), 1.0).item<double>() == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("InfoNCE on identical embeddings is N log N") {
    auto row = torch::randn({1, 16});
    auto v = row.repeat({4, 1});
    CHECK(info_nce_loss(seq(v), seq(v), 0.07).item<double>() == doctest::Approx(4.0 * std::log(4.0)).epsilon(1e-5));
}

TEST_CASE("InfoNCE agrees with the direct formula, is nonnegative and permutation invariant") {
    torch::manual_seed(11);
    for (int trial = 0; trial < 10; ++trial) {
        auto v = torch::randn({6, 5}, torch::kFloat64);
        auto g = torch::randn({6, 5}, torch::kFloat64);
        const double got = info_nce_loss(seq(v), seq(g), 0.3).item<double>();
        CHECK(got >= 0.0);
        CHECK(got == doctest::Approx(oracle::info_nce(to_matrix(v), to_matrix(g), 0.3)).epsilon(1e-9));
        auto perm = torch::randperm(6);
        CHECK(info_nce_loss(seq(v.index_select(0, perm)), seq(g.index_select(0, perm)), 0.3).item<double>() ==
              doctest::Approx(got).epsilon(1e-9));
    }
}

TEST_CASE("InfoNCE respects masks and rejects bad arguments") {
    auto v = torch::randn({1, 3, 4});
    auto g = torch::randn({1, 3, 4});
    auto mask = torch::tensor({true, true, false}).view({1, 3});
    auto masked = info_nce_loss({v, mask}, {g, mask}, 0.5).item<double>();
    auto trimmed = info_nce_loss(seq(v[0].narrow(0, 0, 2)), seq(g[0].narrow(0, 0, 2)), 0.5).item<double>();
    CHECK(masked == doctest::Approx(trimmed).epsilon(1e-6));
    CHECK_THROWS(info_nce_loss(seq(v[0]), seq(g[0]), 0.0));
    CHECK_THROWS(info_nce_loss(seq(v[0]), seq(g[0]), -1.0));
    auto none = torch::zeros({1, 3}, torch::kBool);
    CHECK_THROWS(info_nce_loss({v, none}, {g, none}, 0.5));
}

TEST_CASE("KL of identical maps is zero") {
    auto p = torch::softmax(torch::randn({4096}, torch::kFloat64), 0).view({64, 64});
    CHECK(std::abs(kl_gaze_loss(p, p).item<double>()) < 1e-8);
    auto u = GazeHeatmap::uniform();
    CHECK(std::abs(kl_gaze_loss(u, u)) < 1e-8);
}

TEST_CASE("KL on the 2x2 example") {
    auto gt = torch::full({2, 2}, 0.25, torch::kFloat64);
    auto pred = torch::tensor({0.4, 0.2, 0.2, 0.2}, torch::kFloat64).view({2, 2});
    const double expected = oracle::kl({0.25, 0.25, 0.25, 0.25}, {0.4, 0.2, 0.2, 0.2});
    CHECK(expected == doctest::Approx(0.04985).epsilon(1e-4));
    CHECK(kl_gaze_loss(gt, pred).item<double>() == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("KL is nonnegative, floors zeros and rejects non-distributions") {
    torch::manual_seed(5);
    for (int trial = 0; trial < 10; ++trial) {
        auto p = torch::softmax(torch::randn({3, 8, 8}, torch::kFloat64) * 3, -1);
        p = p / p.sum({-1, -2}, true);
        auto q = torch::softmax(torch::randn({3, 8, 8}, torch::kFloat64) * 3, -1);
        q = q / q.sum({-1, -2}, true);
        CHECK(kl_gaze_loss(p, q).item<double>() >= 0.0);
    }
    auto gt = torch::tensor({0.5, 0.5, 0.0, 0.0}, torch::kFloat64).view({2, 2});
    auto pred = torch::tensor({1.0, 0.0, 0.0, 0.0}, torch::kFloat64).view({2, 2});
    const double got = kl_gaze_loss(gt, pred).item<double>();
    CHECK(std::isfinite(got));
    CHECK(got == doctest::Approx(oracle::kl({0.5, 0.5, 0, 0}, {1, 0, 0, 0})).epsilon(1e-9));
    CHECK_THROWS(kl_gaze_loss(torch::full({2, 2}, 0.3, torch::kFloat64), gt));
    CHECK_THROWS(kl_gaze_loss(gt, torch::tensor({1.5, -0.5, 0.0, 0.0}, torch::kFloat64).view({2, 2})));
}

TEST_CASE("total gaze loss is the plain sum") {
    CHECK(gaze_total_loss(0.5, 0.25) == 0.75);
    CHECK(gaze_total_loss(0.0, 0.0) == 0.0);
    CHECK(gaze_total_loss(0.62652, 0.04985) == doctest::Approx(0.67637).epsilon(1e-9));
}

TEST_CASE("InfoNCE gradients match finite differences") {
    torch::manual_seed(21);
    auto v = torch::randn({4, 6}, torch::kFloat64).requires_grad_(true);
    auto g = torch::randn({4, 6}, torch::kFloat64).requires_grad_(true);
    auto loss = info_nce_loss(seq(v), seq(g), 0.5);
    loss.backward();
    auto x = flat(torch::cat({v.detach().view(-1), g.detach().view(-1)}));
    auto analytic = flat(torch::cat({v.grad().view(-1), g.grad().view(-1)}));
    auto f = [](const std::vector<double>& p) {
        auto t = torch::tensor(p, torch::kFloat64);
        return info_nce_loss(seq(t.narrow(0, 0, 24).view({4, 6})), seq(t.narrow(0, 24, 24).view({4, 6})), 0.5)
            .item<double>();
    };
    CHECK(oracle::gradient_error(f, x, analytic) < 1e-3);
}

TEST_CASE("KL gradients match finite differences") {
    torch::manual_seed(22);
    auto gt = torch::softmax(torch::randn({4, 16}, torch::kFloat64), 1).view({4, 4, 4});
    auto logits = torch::randn({4, 16}, torch::kFloat64).requires_grad_(true);
    auto pred = torch::softmax(logits, 1).view({4, 4, 4});
    kl_gaze_loss(gt, pred).backward();
    auto f = [&](const std::vector<double>& p) {
        auto l = torch::tensor(p, torch::kFloat64).view({4, 16});
        return kl_gaze_loss(gt, torch::softmax(l, 1).view({4, 4, 4})).item<double>();
    };
    CHECK(oracle::gradient_error(f, flat(logits.detach()), flat(logits.grad())) < 1e-3);
}
