#include "gazenlq/gaze/pretrain.hpp"

#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>

#include "gazenlq/core/checkpoint.hpp"
#include "gazenlq/core/log.hpp"
#include "gazenlq/core/training.hpp"
#include "gazenlq/gaze/heatmap.hpp"
#include "gazenlq/gaze/losses.hpp"

namespace gazenlq::gaze {

namespace {

struct BatchLoss {
    torch::Tensor nce;
    torch::Tensor kl;
};

BatchLoss batch_loss(GazeEstimator& model, const GazeBatch& batch) {
    auto est = model->forward(batch.features);
    auto target_emb = model->embed_heatmaps(batch.heatmaps, batch.features.mask);
    auto nce = info_nce_loss(est.embeddings, target_emb, model->temperature());
    auto kl = kl_gaze_loss(batch.heatmaps, est.heatmaps, batch.features.mask);
    return {nce, kl};
}

}  // namespace

GazeBatch collate_gaze_batch(const std::vector<GazePretrainItem>& data, const std::vector<size_t>& indices) {
    std::vector<torch::Tensor> feats;
    feats.reserve(indices.size());
    int64_t t_max = 0;
    for (auto i : indices) {
        feats.push_back(data[i].features);
        t_max = std::max(t_max, data[i].features.size(0));
    }
    auto features = pad_batch(feats);
    auto maps = torch::full({static_cast<int64_t>(indices.size()), t_max, kHeatmapSide, kHeatmapSide},
                            1.0 / static_cast<double>(kHeatmapCells), torch::kFloat32);
    for (size_t b = 0; b < indices.size(); ++b) {
        const auto& h = data[indices[b]].heatmaps;
        if (h.size(0) != data[indices[b]].features.size(0)) {
            throw ShapeError("gaze pretrain item '" + data[indices[b]].video_id + "': heatmap / feature lengths differ");
        }
        maps[static_cast<int64_t>(b)].narrow(0, 0, h.size(0)).copy_(h);
    }
    return {features, maps};
}

GazeLosses evaluate_gaze_losses(GazeEstimator& model, const std::vector<GazePretrainItem>& data, int64_t batch) {
    if (data.empty()) throw std::invalid_argument("evaluate_gaze_losses: empty dataset");
    torch::NoGradGuard no_grad;
    GazeLosses sum;
    int64_t n = 0;
    for (size_t s = 0; s < data.size(); s += static_cast<size_t>(batch)) {
        std::vector<size_t> idx;
        for (size_t i = s; i < std::min(data.size(), s + static_cast<size_t>(batch)); ++i) idx.push_back(i);
        auto l = batch_loss(model, collate_gaze_batch(data, idx));
        sum.nce += l.nce.item<double>();
        sum.kl += l.kl.item<double>();
        ++n;
    }
    return {sum.nce / static_cast<double>(n), sum.kl / static_cast<double>(n)};
}

std::vector<LossRecord> pretrain_gaze(GazeEstimator& model, const std::vector<GazePretrainItem>& data,
                                      const PretrainOptions& options,
                                      const std::function<void(const LossRecord&)>& on_epoch) {
    if (data.empty()) throw std::invalid_argument("pretrain_gaze: empty dataset");
    if (options.batch < 1 || options.epochs < 0) throw std::invalid_argument("pretrain_gaze: bad batch / epochs");
    if (options.lr < 0.0) throw std::invalid_argument("pretrain_gaze: lr must be >= 0");

    model->train();
    auto optimizer = make_adamw(*model, options.lr, options.weight_decay);
    const auto steps_per_epoch =
        static_cast<int64_t>((data.size() + static_cast<size_t>(options.batch) - 1) / static_cast<size_t>(options.batch));
    const auto total_steps = steps_per_epoch * options.epochs;
    const auto warmup_steps = steps_per_epoch * options.warmup_epochs;

    std::mt19937_64 rng(options.shuffle_seed);
    // Resumed runs replay the shuffle stream so batch order matches an uninterrupted run.
    for (int64_t e = 0; e < options.start_epoch; ++e) shuffled_batches(data.size(), static_cast<size_t>(options.batch), rng);

    std::vector<LossRecord> log;
    int64_t step = options.start_step;
    int64_t local_step = 0;
    for (int64_t epoch = 0; epoch < options.epochs; ++epoch) {
        LossRecord rec;
        rec.epoch = options.start_epoch + epoch + 1;
        int64_t n = 0;
        for (const auto& idx : shuffled_batches(data.size(), static_cast<size_t>(options.batch), rng)) {
            set_learning_rate(*optimizer, options.lr * warmup_cosine(local_step, total_steps, warmup_steps));
            optimizer->zero_grad();
            auto l = batch_loss(model, collate_gaze_batch(data, idx));
            auto total = gaze_total_loss(l.nce, l.kl);
            total.backward();
            optimizer->step();
            rec.nce += l.nce.item<double>();
            rec.kl += l.kl.item<double>();
            ++n;
            ++step;
            ++local_step;
        }
        rec.nce /= static_cast<double>(n);
        rec.kl /= static_cast<double>(n);
        rec.total = rec.nce + rec.kl;
        rec.step = step;
        log::debug(log::format("gaze epoch %lld step %lld nce %.5f kl %.5f", static_cast<long long>(rec.epoch),
                               static_cast<long long>(rec.step), rec.nce, rec.kl));
        log.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }
    model->eval();
    return log;
}

std::string loss_log_csv(const std::vector<LossRecord>& records) {
    std::ostringstream out;
    out << "epoch,step,nce,kl,total\n";
    char buf[160];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%lld,%lld,%.6f,%.6f,%.6f\n", static_cast<long long>(r.epoch),
                      static_cast<long long>(r.step), r.nce, r.kl, r.total);
        out << buf;
    }
    return out.str();
}

void save_gaze_checkpoint(const std::filesystem::path& path, GazeEstimator& model, int64_t epoch, int64_t step) {
    Checkpoint ck;
    ck.version = kGazeCheckpointVersion;
    ck.config = {{"gaze", model->config().to_json()}, {"epoch", epoch}, {"step", step}};
    ck.arrays = named_state(*model);
    ck.save(path);
}

GazeEstimator load_gaze_checkpoint(const std::filesystem::path& path, GazeCheckpointInfo* info) {
    if (!std::filesystem::exists(path)) throw std::runtime_error("gaze checkpoint not found: " + path.string());
    auto ck = Checkpoint::load(path, kGazeCheckpointVersion);
    auto cfg = GazeEstimatorConfig::from_json(ck.config.at("gaze"));
    GazeEstimator model(cfg);
    load_state(*model, ck);
    model->eval();
    if (info) *info = {cfg, ck.config.value("epoch", int64_t{0}), ck.config.value("step", int64_t{0})};
    return model;
}

}  // namespace gazenlq::gaze
