// Acceptance suite: one PASS/FAIL line per headline criterion.
// Usage: acceptance [criterion-name ...]   (no names runs everything)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <random>
#include <string>
#include <vector>

#include "gazenlq/cli/commands.hpp"
#include "gazenlq/core/binary_io.hpp"
#include "gazenlq/core/checkpoint.hpp"
#include "gazenlq/core/training.hpp"
#include "gazenlq/core/log.hpp"
#include "gazenlq/core/seeding.hpp"
#include "gazenlq/data/synthetic.hpp"
#include "gazenlq/eval/predict.hpp"
#include "gazenlq/eval/prediction_file.hpp"
#include "gazenlq/gaze/losses.hpp"
#include "gazenlq/gaze/pretrain.hpp"
#include "gazenlq/grounding/finetune.hpp"
#include "oracles.hpp"

using namespace gazenlq;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    std::function<Outcome()> run;
};

fs::path workdir() {
    const char* env = std::getenv("GAZENLQ_TEST_TMP");
    fs::path root = (env ? fs::path(env) : fs::temp_directory_path()) / "gazenlq_acceptance";
    fs::create_directories(root);
    return root;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

std::vector<double> flat(const torch::Tensor& t) {
    auto c = t.detach().to(torch::kFloat64).contiguous().view(-1);
    return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

// ---------------------------------------------------------------------------
// Experiment settings shared by the training criteria.

constexpr int64_t kPretrainBatch = 16;
constexpr double kPretrainLr = 1e-3;
constexpr double kPretrainWeightDecay = 0.01;

constexpr int64_t kGroundEpochs = 30;
constexpr double kGroundLr = 1e-4;
constexpr int64_t kGroundBatch = 8;
constexpr int64_t kGroundWarmup = 2;

constexpr int kDirectionalSeeds = 5;
constexpr int64_t kDirectionalVideos = 256;
constexpr size_t kDirectionalTrain = 192;

// Shared estimator. On small pretraining sets InfoNCE memorizes the random
// off-segment gaze patterns and held-out embeddings come out mostly noise.
constexpr int64_t kSharedPretrainVideos = 2048;
constexpr int64_t kSharedPretrainEpochs = 8;
constexpr double kSharedHeatmapSigma = 0.5;

/// Pretrains an estimator on `ds` and writes it to `path` (skipped when the
/// file already exists from an earlier criterion in this process).
fs::path pretrain_estimator(const data::SyntheticDataset& ds, uint64_t seed, int64_t epochs, const fs::path& path,
                            double heatmap_sigma = gaze::GazeEstimatorConfig{}.heatmap_sigma) {
    static std::vector<std::string> done;
    if (std::find(done.begin(), done.end(), path.string()) != done.end()) return path;
    torch::manual_seed(derive_seed(seed, "init"));
    gaze::GazeEstimatorConfig cfg;
    cfg.heatmap_sigma = heatmap_sigma;
    gaze::GazeEstimator model(cfg);
    gaze::PretrainOptions opts;
    opts.lr = kPretrainLr;
    opts.batch = kPretrainBatch;
    opts.epochs = epochs;
    opts.weight_decay = kPretrainWeightDecay;
    opts.shuffle_seed = derive_seed(seed, "shuffle");
    const auto records = gaze::pretrain_gaze(model, ds.pretrain_items(model->config().heatmap_sigma), opts);
    log::info(log::format("pretrained estimator seed %llu: loss %.4f -> %.4f", static_cast<unsigned long long>(seed),
                          records.front().total, records.back().total));
    gaze::save_gaze_checkpoint(path, model, epochs, records.back().step);
    done.push_back(path.string());
    return path;
}

grounding::GroundingConfig ground_config(grounding::GazeMode mode) {
    grounding::GroundingConfig cfg;
    cfg.gaze_mode = mode;
    cfg.lr = kGroundLr;
    cfg.batch = kGroundBatch;
    cfg.epochs = kGroundEpochs;
    cfg.warmup_epochs = kGroundWarmup;
    return cfg;
}

eval::EvalResult train_and_evaluate(const grounding::GroundingConfig& cfg, const fs::path& gaze_ckpt, uint64_t seed,
                                    const std::vector<grounding::QuerySample>& train,
                                    const std::vector<grounding::QuerySample>& val) {
    auto model = grounding::build_grounding_model(cfg, gaze_ckpt, derive_seed(seed, "init"));
    grounding::FinetuneOptions opts;
    opts.shuffle_seed = derive_seed(seed, "shuffle");
    grounding::finetune(model, train, opts);
    const auto preds = eval::predict(model, val);
    return eval::evaluate(preds.ranked(), eval::ground_truth(val));
}

data::SyntheticDataset directional_data(int seed) {
    data::SyntheticSpec spec;
    spec.n_videos = kDirectionalVideos;
    spec.gaze_signal_strength = 0.9;
    spec.seed = static_cast<uint64_t>(seed);
    return data::generate_dataset(spec);
}

/// One estimator pretrained on its own gaze dataset (same world, disjoint
/// videos), shared by every grounding run.
fs::path shared_estimator() {
    data::SyntheticSpec spec;
    spec.n_videos = kSharedPretrainVideos;
    spec.gaze_signal_strength = 0.9;
    spec.seed = 1000;
    return pretrain_estimator(data::generate_dataset(spec), 1000, kSharedPretrainEpochs, workdir() / "shared_gaze.ckpt",
                              kSharedHeatmapSigma);
}

// ---------------------------------------------------------------------------

Outcome loss_identities() {
    std::vector<std::string> failures;
    auto dense = [](torch::Tensor t) { return EmbeddingSequence::dense(std::move(t)); };

    auto one = torch::randn({1, 8}, torch::kFloat64);
    const double n1 = gaze::info_nce_loss(dense(one), dense(torch::randn({1, 8}, torch::kFloat64)), 0.07).item<double>();
    if (n1 != 0.0) failures.push_back("N=1 gives " + fmt("%.3g", n1));

    for (int64_t n : {2, 4, 16}) {
        auto row = torch::randn({1, 8}, torch::kFloat64).expand({n, 8}).contiguous();
        const double got = gaze::info_nce_loss(dense(row), dense(row.clone()), 0.07).item<double>();
        const double want = static_cast<double>(n) * std::log(static_cast<double>(n));
        if (std::abs(got - want) > 1e-5) failures.push_back("identical N=" + std::to_string(n) + " gives " + fmt("%.8f", got));
    }

    auto p = torch::softmax(torch::randn({3, 64 * 64}, torch::kFloat64), 1).view({3, 64, 64});
    const double kl_pp = gaze::kl_gaze_loss(p, p).item<double>();
    if (std::abs(kl_pp) > 1e-8) failures.push_back("KL(p,p) = " + fmt("%.3g", kl_pp));

    auto e = torch::eye(2, torch::kFloat64);
    const double ortho = gaze::info_nce_loss(dense(e), dense(e.clone()), 1.0).item<double>();
    const double reference = oracle::info_nce({{1, 0}, {0, 1}}, {{1, 0}, {0, 1}}, 1.0);
    if (std::abs(ortho - 0.62652) > 1e-4 || std::abs(ortho - reference) > 1e-12) {
        failures.push_back("orthogonal N=2 gives " + fmt("%.6f", ortho));
    }
    if (failures.empty()) return {true, "N=1 -> 0, N log N, KL(p,p) = 0, orthogonal = " + fmt("%.5f", ortho)};
    std::string msg;
    for (const auto& f : failures) msg += f + "; ";
    return {false, msg};
}

Outcome gradient_checks() {
    const auto t0 = std::chrono::steady_clock::now();
    auto seq = [](torch::Tensor t) { return EmbeddingSequence::dense(std::move(t)); };
    torch::manual_seed(101);

    // InfoNCE on 4 pairs.
    auto v = torch::randn({4, 6}, torch::kFloat64).requires_grad_(true);
    auto g = torch::randn({4, 6}, torch::kFloat64).requires_grad_(true);
    gaze::info_nce_loss(seq(v), seq(g), 0.3).backward();
    const double nce_err = oracle::gradient_error(
        [](const std::vector<double>& x) {
            auto t = torch::tensor(x, torch::kFloat64);
            return gaze::info_nce_loss(EmbeddingSequence::dense(t.narrow(0, 0, 24).view({4, 6})),
                                       EmbeddingSequence::dense(t.narrow(0, 24, 24).view({4, 6})), 0.3)
                .item<double>();
        },
        flat(torch::cat({v.view(-1), g.view(-1)})), flat(torch::cat({v.grad().view(-1), g.grad().view(-1)})));

    // KL through a softmax parametrization of the prediction, 4 maps.
    auto gt = torch::softmax(torch::randn({4, 64}, torch::kFloat64), 1).view({4, 8, 8});
    auto logits = torch::randn({4, 64}, torch::kFloat64).requires_grad_(true);
    gaze::kl_gaze_loss(gt, torch::softmax(logits, 1).view({4, 8, 8})).backward();
    const double kl_err = oracle::gradient_error(
        [&](const std::vector<double>& x) {
            auto l = torch::tensor(x, torch::kFloat64).view({4, 64});
            return gaze::kl_gaze_loss(gt, torch::softmax(l, 1).view({4, 8, 8})).item<double>();
        },
        flat(logits), flat(logits.grad()));

    // Localization loss through the prediction heads of a small model, 3 samples.
    grounding::GroundingConfig cfg;
    cfg.gaze_mode = grounding::GazeMode::off;
    cfg.d_model = 16;
    cfg.n_heads = 2;
    cfg.d_video = 8;
    cfg.d_text = 6;
    cfg.n_pyramid_levels = 3;
    grounding::GroundingModel model(cfg, gaze::GazeEstimator{nullptr});
    model->to(torch::kFloat64);
    std::vector<grounding::QuerySample> samples(3);
    for (int i = 0; i < 3; ++i) {
        auto& s = samples[static_cast<size_t>(i)];
        s.video_id = "g" + std::to_string(i);
        s.video_features = torch::randn({8 - i, 8});
        s.text_embeddings = torch::randn({2 + i, 6});
        s.seconds_per_window = 0.5;
        s.gt_interval = {0.3 * i, 2.0 + 0.4 * i};
    }
    auto batch = grounding::collate_grounding_batch(samples, {0, 1, 2}, cfg.n_pyramid_levels);
    batch.inputs.video.data = batch.inputs.video.data.to(torch::kFloat64);
    batch.inputs.text.data = batch.inputs.text.data.to(torch::kFloat64);
    batch.targets = {batch.targets.labels.to(torch::kFloat64), batch.targets.offsets.to(torch::kFloat64)};
    std::vector<torch::Tensor> params;
    for (auto& p : model->cls_head->parameters()) params.push_back(p);
    for (auto& p : model->reg_head->parameters()) params.push_back(p);
    grounding::localization_loss(model->forward(batch.inputs), batch.targets).total.backward();
    std::vector<double> x, analytic;
    for (auto& p : params) {
        auto a = flat(p), b = flat(p.grad());
        x.insert(x.end(), a.begin(), a.end());
        analytic.insert(analytic.end(), b.begin(), b.end());
    }
    const double loc_err = oracle::gradient_error(
        [&](const std::vector<double>& values) {
            torch::NoGradGuard no_grad;
            size_t k = 0;
            for (auto& p : params) {
                auto f = p.view(-1);
                for (int64_t i = 0; i < f.numel(); ++i) f[i] = values[k++];
            }
            return grounding::localization_loss(model->forward(batch.inputs), batch.targets).total.item<double>();
        },
        x, analytic);

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = nce_err < 1e-3 && kl_err < 1e-3 && loc_err < 1e-3 && secs < 60.0;
    return {pass, "max rel err NCE " + fmt("%.2e", nce_err) + ", KL " + fmt("%.2e", kl_err) + ", localization " +
                      fmt("%.2e", loc_err) + " in " + fmt("%.1f", secs) + " s"};
}

Outcome oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    int nms_bad = 0, recall_bad = 0;
    for (int trial = 0; trial < 200; ++trial) {
        eval::SoftNmsOptions opts;
        if (trial % 3 == 1) opts.method = eval::SoftNmsMethod::linear;
        if (trial % 4 == 2) opts.score_floor = 0.1;
        opts.sigma = 0.25 + 0.25 * (trial % 4);
        const auto moments = oracle::random_moments(rng, 6);
        const auto got = eval::soft_nms(moments, opts);
        const auto want = oracle::soft_nms(moments, opts);
        bool same = got.size() == want.size();
        for (size_t i = 0; same && i < got.size(); ++i) {
            same = got[i].start_s == want[i].start_s && got[i].end_s == want[i].end_s &&
                   std::abs(got[i].score - want[i].score) <= 1e-12;
        }
        nms_bad += same ? 0 : 1;
    }
    std::uniform_real_distribution<double> pos(0.0, 40.0), len(0.2, 12.0);
    for (int trial = 0; trial < 200; ++trial) {
        eval::GroundTruth gt;
        eval::RankedPredictions preds;
        const int n = 1 + static_cast<int>(rng() % 12);
        for (int q = 0; q < n; ++q) {
            const eval::QueryKey key{"c" + std::to_string(q), "a" + std::to_string(q), q % 3};
            const double s = pos(rng);
            gt[key] = {s, s + len(rng)};
            const int m = static_cast<int>(rng() % 8);
            if (m == 7) continue;
            for (int j = 0; j < m; ++j) {
                const double a = (rng() % 3 == 0) ? s + std::uniform_real_distribution<double>(-1, 1)(rng) : pos(rng);
                preds[key].push_back({a, a + len(rng), 1.0 - 0.05 * j});
            }
        }
        for (int k : {1, 5}) {
            for (double theta : {0.3, 0.5, 0.7}) {
                if (std::abs(eval::recall_at_k(preds, gt, k, theta) - oracle::recall(preds, gt, k, theta)) > 1e-9) {
                    ++recall_bad;
                    goto next_instance;
                }
            }
        }
    next_instance:;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {nms_bad == 0 && recall_bad == 0 && secs < 60.0,
            "soft-NMS mismatches " + std::to_string(nms_bad) + "/200, recall mismatches " + std::to_string(recall_bad) +
                "/200 in " + fmt("%.1f", secs) + " s"};
}

Outcome target_round_trip() {
    std::mt19937_64 rng(77);
    double worst = 0.0;
    int failures = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int64_t t = std::uniform_int_distribution<int64_t>(1, 64)(rng);
        const int64_t levels = std::uniform_int_distribution<int64_t>(1, 5)(rng);
        const double spw = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
        std::uniform_real_distribution<double> pos(0.0, static_cast<double>(t) * spw);
        double a = pos(rng), b = pos(rng);
        if (a > b) std::swap(a, b);
        b = std::max(b, a + 1e-3);

        const auto layout = grounding::PyramidLayout::for_length(t, levels);
        const auto targets = grounding::assign_targets({a, b}, spw, layout);

        // A pyramid whose heads emit exactly the assigned targets, decoded by the inference path.
        grounding::FeaturePyramid pyramid;
        size_t offset = 0;
        for (size_t l = 0; l < layout.lengths.size(); ++l) {
            const int64_t n = layout.lengths[l];
            auto cls = torch::full({1, n}, -std::numeric_limits<double>::infinity(), torch::kFloat64);
            auto reg = torch::zeros({1, n, 2}, torch::kFloat64);
            for (int64_t i = 0; i < n; ++i) {
                const size_t k = offset + static_cast<size_t>(i);
                if (!targets.positive[k]) continue;
                cls[0][i] = 10.0;
                reg[0][i][0] = targets.left[k];
                reg[0][i][1] = targets.right[k];
            }
            pyramid.levels.push_back({layout.strides[l], torch::zeros({1, n, 1}), torch::ones({1, n}, torch::kBool), cls, reg});
            offset += static_cast<size_t>(n);
        }
        const auto moments = eval::decode_moments(pyramid, 0, spw, static_cast<double>(t) * spw, 0.0, -1);
        if (moments.empty()) {
            ++failures;
            continue;
        }
        for (const auto& m : moments) worst = std::max({worst, std::abs(m.start_s - a), std::abs(m.end_s - b)});
    }
    return {failures == 0 && worst <= 1e-6,
            "100 samples, " + std::to_string(failures) + " without positives, max endpoint error " + fmt("%.2e", worst) + " s"};
}

Outcome overfit_sanity() {
    const auto t0 = std::chrono::steady_clock::now();
    data::SyntheticSpec spec;
    spec.n_videos = 8;
    spec.gaze_signal_strength = 1.0;
    spec.seed = 100;
    const auto ds = data::generate_dataset(spec);
    const auto ckpt = pretrain_estimator(ds, 100, 100, workdir() / "overfit_gaze.ckpt");

    auto cfg = ground_config(grounding::GazeMode::positive);
    cfg.epochs = 200;
    cfg.lr = 5e-4;
    cfg.warmup_epochs = 5;
    cfg.weight_decay = 0.0;
    const auto samples = ds.query_samples();
    const auto r = train_and_evaluate(cfg, ckpt, 100, samples, samples);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {r.r1_05 == 100.0 && secs < 600.0,
            "train R1@0.5 " + fmt("%.2f", r.r1_05) + " after 200 epochs (R1@0.3 " + fmt("%.2f", r.r1_03) + ") in " +
                fmt("%.0f", secs) + " s"};
}

Outcome directional_benefit() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> pos, off, diffs;
    for (int seed = 0; seed < kDirectionalSeeds; ++seed) {
        const auto ds = directional_data(seed);
        const auto train = ds.slice(0, kDirectionalTrain).query_samples();
        const auto val = ds.slice(kDirectionalTrain, ds.videos.size()).query_samples();
        const auto ckpt = shared_estimator();
        const auto rp = train_and_evaluate(ground_config(grounding::GazeMode::positive), ckpt, seed, train, val);
        const auto ro = train_and_evaluate(ground_config(grounding::GazeMode::off), "", seed, train, val);
        pos.push_back(rp.r1_05);
        off.push_back(ro.r1_05);
        diffs.push_back(rp.r1_05 - ro.r1_05);
        log::info(log::format("directional seed %d: R1@0.5 positive %.2f off %.2f", seed, rp.r1_05, ro.r1_05));
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    const double mp = median(pos), mo = median(off);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string per_seed;
    for (size_t i = 0; i < pos.size(); ++i) per_seed += fmt("%.1f", pos[i]) + "/" + fmt("%.1f", off[i]) + " ";
    return {mp - mo >= 5.0 && secs < 3600.0,
            "median val R1@0.5 positive " + fmt("%.2f", mp) + " vs off " + fmt("%.2f", mo) + " (+" + fmt("%.2f", mp - mo) +
                "); per seed " + per_seed + "in " + fmt("%.0f", secs) + " s"};
}

Outcome freeze_ablation() {
    data::SyntheticSpec spec;
    spec.n_videos = 24;
    spec.seed = 300;
    const auto ds = data::generate_dataset(spec);
    const auto ckpt = pretrain_estimator(ds, 300, 5, workdir() / "freeze_gaze.ckpt");
    const auto reference = named_state(*gaze::load_gaze_checkpoint(ckpt));
    const auto samples = ds.query_samples();

    std::string detail;
    bool pass = true;
    for (bool freeze : {true, false}) {
        auto cfg = ground_config(grounding::GazeMode::positive);
        cfg.freeze_gaze = freeze;
        cfg.epochs = 3;
        auto model = grounding::build_grounding_model(cfg, ckpt, derive_seed(300, "init"));
        grounding::FinetuneOptions opts;
        opts.shuffle_seed = derive_seed(300, "shuffle");
        const auto log = grounding::finetune(model, samples, opts);
        const bool unchanged = bitwise_equal(reference, named_state(*model->estimator()));
        const bool finite = std::isfinite(log.back().total);
        pass = pass && finite && log.size() == 3 && (freeze ? unchanged : !unchanged);
        const auto r = eval::evaluate(eval::predict(model, samples).ranked(), eval::ground_truth(samples));
        detail += std::string(freeze ? "frozen" : "trained") + ": gaze params " + (unchanged ? "bitwise unchanged" : "updated") +
                  ", loss " + fmt("%.3f", log.back().total) + ", R1@0.5 " + fmt("%.1f", r.r1_05) + "; ";
    }
    return {pass, detail};
}

Outcome gaze_learnability() {
    const auto ds = directional_data(0);
    auto estimator = gaze::load_gaze_checkpoint(shared_estimator());
    estimator->eval();
    torch::NoGradGuard no_grad;
    int64_t hits = 0, near = 0, gt_hits = 0, total = 0;
    const double sigma = estimator->config().heatmap_sigma;
    for (size_t i = kDirectionalTrain; i < ds.videos.size(); ++i) {
        const auto& v = ds.videos[i];
        const auto maps = estimator->forward(EmbeddingSequence::dense(v.gaze_features)).heatmaps;
        const auto gt = ds.window_heatmaps(i, sigma);
        for (auto w : ds.in_segment_windows(i)) {
            const auto idx = maps[w].flatten().argmax().item<int64_t>();
            const auto row = idx / 64, col = idx % 64;
            hits += (row == v.planted_row && col == v.planted_col) ? 1 : 0;
            near += (std::abs(row - v.planted_row) <= 2 && std::abs(col - v.planted_col) <= 2) ? 1 : 0;
            const auto gidx = gt[w].flatten().argmax().item<int64_t>();
            gt_hits += (gidx / 64 == v.planted_row && gidx % 64 == v.planted_col) ? 1 : 0;
            ++total;
        }
    }
    auto pct = [&](int64_t n) { return total ? 100.0 * static_cast<double>(n) / static_cast<double>(total) : 0.0; };
    const double rate = pct(hits);
    return {total > 0 && rate >= 90.0,
            "argmax on the planted cell in " + std::to_string(hits) + "/" + std::to_string(total) +
                " held-out in-segment windows (" + fmt("%.1f", rate) + "%, strength 0.9; within 2 cells " +
                fmt("%.1f", pct(near)) + "%, ground-truth maps " + fmt("%.1f", pct(gt_hits)) + "%)"};
}

Outcome prediction_schema() {
    const auto dir = workdir() / "schema";
    fs::create_directories(dir);
    auto at = [&](const char* name) { return (dir / name).string(); };
    // Command status lines go to stdout; keep it for the PASS/FAIL lines.
    std::ostringstream sink;
    auto* saved = std::cout.rdbuf(sink.rdbuf());
    struct Restore {
        std::streambuf* buf;
        ~Restore() { std::cout.rdbuf(buf); }
    } restore{saved};
    if (cli::run({"gen-data", "--n-videos", "8", "--seed", "5", "--out", at("data.bin")}) != 0) return {false, "gen-data failed"};
    if (cli::run({"train", "--data", at("data.bin"), "--gaze-mode", "off", "--epochs", "2", "--out", at("model.ckpt")}) != 0) {
        return {false, "train failed"};
    }
    if (cli::run({"predict", "--checkpoint", at("model.ckpt"), "--data", at("data.bin"), "--out", at("pred.json")}) != 0) {
        return {false, "predict failed"};
    }
    const auto bytes = io::read_file(at("pred.json"));
    const std::string text(bytes.begin(), bytes.end());
    try {
        eval::validate_prediction_bytes(text);
    } catch (const std::exception& e) {
        return {false, std::string("prediction file invalid: ") + e.what()};
    }
    auto file = eval::PredictionFile::parse(text);
    if (cli::run({"ensemble", at("pred.json"), "--out", at("ens.json")}) != 0) return {false, "ensemble failed"};
    for (auto& r : file.results) r.moments = eval::soft_nms(r.moments);
    const auto ens = io::read_file(at("ens.json"));
    const bool same = std::string(ens.begin(), ens.end()) == file.serialize();
    return {same, "predict output is byte-canonical (" + std::to_string(file.results.size()) + " queries); "
                  "single-file ensemble " + (same ? "equals" : "differs from") + " soft_nms of it"};
}

}  // namespace

int main(int argc, char** argv) {
    log::init_from_env();
    if (!std::getenv("GAZENLQ_LOG")) log::set_level(log::Level::warn);
    torch::set_num_threads(1);

    const std::vector<Criterion> criteria{
        {"loss-identities", loss_identities},       {"gradient-checks", gradient_checks},
        {"oracle-equivalence", oracle_equivalence}, {"target-round-trip", target_round_trip},
        {"overfit-sanity", overfit_sanity},         {"directional-gaze-benefit", directional_benefit},
        {"freeze-ablation", freeze_ablation},       {"gaze-learnability", gaze_learnability},
        {"prediction-schema", prediction_schema},
    };
    std::vector<std::string> wanted(argv + 1, argv + argc);
    int failed = 0;
    for (const auto& c : criteria) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) continue;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
