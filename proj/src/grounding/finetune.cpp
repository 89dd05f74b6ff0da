#include "gazenlq/grounding/finetune.hpp"

#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>

#include "gazenlq/core/binary_io.hpp"
#include "gazenlq/core/checkpoint.hpp"
#include "gazenlq/core/log.hpp"
#include "gazenlq/core/training.hpp"
#include "gazenlq/gaze/heatmap.hpp"
#include "gazenlq/gaze/pretrain.hpp"

namespace gazenlq::grounding {

namespace {

void set_requires_grad(torch::nn::Module& module, bool value) {
    for (auto& p : module.parameters(true)) p.set_requires_grad(value);
}

}  // namespace

TrainingBatch collate_grounding_batch(const std::vector<QuerySample>& data, const std::vector<size_t>& indices,
                                      int64_t n_levels, const std::vector<CachedGaze>& cache) {
    if (indices.empty()) throw std::invalid_argument("collate_grounding_batch: empty batch");
    std::vector<torch::Tensor> video, text, gaze;
    bool all_gaze = true;
    for (auto i : indices) {
        const auto& s = data.at(i);
        video.push_back(s.video_features);
        text.push_back(s.text_embeddings);
        all_gaze = all_gaze && s.gaze_features.defined();
        if (s.gaze_features.defined()) gaze.push_back(s.gaze_features);
    }
    TrainingBatch out;
    out.inputs.video = pad_batch(video);
    out.inputs.text = pad_batch(text);
    if (all_gaze) out.inputs.gaze_features = pad_batch(gaze);

    const auto t_max = out.inputs.video.length();
    if (!cache.empty()) {
        std::vector<torch::Tensor> emb;
        auto maps = torch::full({static_cast<int64_t>(indices.size()), t_max, gaze::kHeatmapSide, gaze::kHeatmapSide},
                                1.0 / static_cast<double>(gaze::kHeatmapCells), torch::kFloat32);
        for (size_t b = 0; b < indices.size(); ++b) {
            const auto& c = cache.at(indices[b]);
            emb.push_back(c.embeddings);
            maps[static_cast<int64_t>(b)].narrow(0, 0, c.heatmaps.size(0)).copy_(c.heatmaps);
        }
        auto padded = pad_batch(emb);
        out.inputs.cached_gaze = GazeStream{padded, maps};
    }

    const auto layout = PyramidLayout::for_length(t_max, n_levels);
    std::vector<LocationTargets> targets;
    for (auto i : indices) {
        const auto& s = data[i];
        targets.push_back(assign_targets(s.gt_interval, s.seconds_per_window, layout, s.num_windows()));
    }
    out.targets = stack_targets(targets);
    return out;
}

std::vector<CachedGaze> cache_gaze_outputs(gaze::GazeEstimator& estimator, const std::vector<QuerySample>& data) {
    torch::NoGradGuard no_grad;
    std::vector<CachedGaze> out;
    out.reserve(data.size());
    for (const auto& s : data) {
        if (!s.gaze_features.defined()) {
            throw std::invalid_argument("sample '" + s.video_id + "' has no gaze features");
        }
        auto est = estimator->forward(EmbeddingSequence::dense(s.gaze_features));
        out.push_back({est.embeddings.data, est.heatmaps});
    }
    return out;
}

std::vector<FinetuneRecord> finetune(GroundingModel& model, const std::vector<QuerySample>& data,
                                     const FinetuneOptions& options,
                                     const std::function<void(const FinetuneRecord&)>& on_epoch) {
    if (data.empty()) throw std::invalid_argument("finetune: empty dataset");
    for (const auto& s : data) s.validate();
    const auto& cfg = model->config();
    const bool uses_gaze = cfg.gaze_mode != GazeMode::off;
    const bool frozen = uses_gaze && cfg.freeze_gaze;

    std::vector<std::pair<std::string, torch::Tensor>> gaze_before;
    std::vector<CachedGaze> cache;
    if (model->has_estimator()) {
        gaze_before = named_state(*model->estimator());
        set_requires_grad(*model->estimator(), !frozen);
    }
    model->train();
    if (frozen) {
        model->estimator()->eval();
        cache = cache_gaze_outputs(model->estimator(), data);
    }

    auto optimizer = make_adamw(*model, cfg.lr, cfg.weight_decay);
    const auto batch = static_cast<size_t>(cfg.batch);
    const auto steps_per_epoch = static_cast<int64_t>((data.size() + batch - 1) / batch);
    const auto total_steps = steps_per_epoch * cfg.epochs;
    const auto warmup_steps = steps_per_epoch * cfg.warmup_epochs;

    std::mt19937_64 rng(options.shuffle_seed);
    std::vector<FinetuneRecord> log;
    int64_t step = 0;
    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        FinetuneRecord rec;
        rec.epoch = epoch + 1;
        int64_t n = 0;
        for (const auto& idx : shuffled_batches(data.size(), batch, rng)) {
            set_learning_rate(*optimizer, cfg.lr * warmup_cosine(step, total_steps, warmup_steps));
            auto tb = collate_grounding_batch(data, idx, cfg.n_pyramid_levels, cache);
            if (!uses_gaze) tb.inputs.gaze_features = {};
            optimizer->zero_grad();
            auto pyramid = model->forward(tb.inputs);
            auto loss = localization_loss(pyramid, tb.targets, options.focal);
            loss.total.backward();
            optimizer->step();
            rec.cls += loss.cls.item<double>();
            rec.reg += loss.reg.item<double>();
            ++n;
            ++step;
        }
        rec.cls /= static_cast<double>(n);
        rec.reg /= static_cast<double>(n);
        rec.total = rec.cls + rec.reg;
        rec.step = step;
        log::debug(log::format("grounding epoch %lld step %lld cls %.5f reg %.5f", static_cast<long long>(rec.epoch),
                               static_cast<long long>(rec.step), rec.cls, rec.reg));
        log.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }
    model->eval();

    if (model->has_estimator()) {
        set_requires_grad(*model->estimator(), true);
        if (frozen && !bitwise_equal(gaze_before, named_state(*model->estimator()))) {
            throw std::logic_error("finetune: frozen gaze estimator parameters changed");
        }
    }
    return log;
}

std::string finetune_log_csv(const std::vector<FinetuneRecord>& records) {
    std::ostringstream out;
    out << "epoch,step,cls,reg,total\n";
    char buf[160];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%lld,%lld,%.6f,%.6f,%.6f\n", static_cast<long long>(r.epoch),
                      static_cast<long long>(r.step), r.cls, r.reg, r.total);
        out << buf;
    }
    return out.str();
}

void save_grounding_checkpoint(const std::filesystem::path& path, GroundingModel& model,
                               const std::string& gaze_checkpoint_hash, int64_t epoch, int64_t step) {
    Checkpoint ck;
    ck.version = kGroundingCheckpointVersion;
    ck.config = {{"grounding", model->config().to_json()},
                 {"gaze", model->has_estimator() ? model->estimator()->config().to_json() : nlohmann::json(nullptr)},
                 {"gaze_checkpoint_hash", gaze_checkpoint_hash},
                 {"epoch", epoch},
                 {"step", step}};
    ck.arrays = named_state(*model);
    ck.save(path);
}

GroundingModel load_grounding_checkpoint(const std::filesystem::path& path, GroundingCheckpointInfo* info) {
    if (!std::filesystem::exists(path)) throw std::runtime_error("grounding checkpoint not found: " + path.string());
    auto ck = Checkpoint::load(path, kGroundingCheckpointVersion);
    auto cfg = GroundingConfig::from_json(ck.config.at("grounding"));
    gaze::GazeEstimator estimator{nullptr};
    if (!ck.config.at("gaze").is_null()) estimator = gaze::GazeEstimator(gaze::GazeEstimatorConfig::from_json(ck.config.at("gaze")));
    GroundingModel model(cfg, estimator);
    load_state(*model, ck);
    model->eval();
    if (info) {
        *info = {cfg, ck.config.value("gaze_checkpoint_hash", std::string()), ck.config.value("epoch", int64_t{0}),
                 ck.config.value("step", int64_t{0})};
    }
    return model;
}

GroundingModel build_grounding_model(const GroundingConfig& config, const std::filesystem::path& gaze_checkpoint,
                                     uint64_t init_seed, std::string* gaze_checkpoint_hash) {
    gaze::GazeEstimator estimator{nullptr};
    std::string hash;
    if (config.gaze_mode != GazeMode::off) {
        if (gaze_checkpoint.empty()) {
            throw std::runtime_error("gaze mode '" + to_string(config.gaze_mode) + "' requires a gaze checkpoint");
        }
        estimator = gaze::load_gaze_checkpoint(gaze_checkpoint);
        hash = io::fnv1a_hex(io::read_file(gaze_checkpoint));
    }
    // Seeded after loading so the grounding layers start from the same weights in every mode.
    torch::manual_seed(init_seed);
    GroundingModel model(config, estimator);
    if (gaze_checkpoint_hash) *gaze_checkpoint_hash = hash;
    return model;
}

}  // namespace gazenlq::grounding
