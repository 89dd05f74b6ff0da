#include "gazenlq/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gazenlq/core/binary_io.hpp"
#include "gazenlq/core/checkpoint.hpp"
#include "gazenlq/core/log.hpp"
#include "gazenlq/core/seeding.hpp"
#include "gazenlq/eval/predict.hpp"
#include "gazenlq/eval/prediction_file.hpp"
#include "gazenlq/eval/recall.hpp"
#include "gazenlq/grounding/finetune.hpp"

namespace gazenlq::cli {

namespace fs = std::filesystem;

namespace {

/// INI reader that accepts snake_case keys and section names for dash-named flags and subcommands.
class SnakeCaseIni : public CLI::ConfigINI {
public:
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        auto items = CLI::ConfigINI::from_config(input);
        for (auto& item : items) {
            std::replace(item.name.begin(), item.name.end(), '_', '-');
            for (auto& parent : item.parents) std::replace(parent.begin(), parent.end(), '_', '-');
        }
        return items;
    }
};

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

void require(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string("missing required option ") + flag);
}

std::string sibling(const std::string& path, const std::string& suffix) { return path + suffix; }

void print(const std::string& line) { std::cout << line << '\n' << std::flush; }

data::SyntheticDataset load_data(const RunConfig& cfg) {
    require(cfg.data_path, "--data");
    return data::load_dataset(cfg.data_path);
}

/// P5 greyscale image, each cell blown up to `scale` x `scale` pixels and
/// intensities scaled so the largest cell is white.
std::string pgm(const torch::Tensor& map, int64_t scale) {
    auto m = map.to(torch::kFloat64).contiguous();
    const double peak = std::max(m.max().item<double>(), 1e-30);
    const auto side = m.size(0) * scale;
    std::string out = "P5\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
    auto a = m.accessor<double, 2>();
    for (int64_t r = 0; r < side; ++r) {
        for (int64_t c = 0; c < side; ++c) {
            const double v = a[r / scale][c / scale] / peak;
            out.push_back(static_cast<char>(static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
        }
    }
    return out;
}

gaze::GazeEstimator load_any_estimator(const std::string& path) {
    try {
        return gaze::load_gaze_checkpoint(path);
    } catch (const io::VersionMismatch&) {
        auto model = grounding::load_grounding_checkpoint(path);
        if (!model->has_estimator()) throw std::runtime_error("checkpoint " + path + " has no gaze estimator");
        return model->estimator();
    }
}

}  // namespace

int cmd_gen_data(const RunConfig& cfg) {
    require(cfg.out, "--out");
    auto spec = cfg.data_spec;
    spec.seed = cfg.seed;
    const auto ds = data::generate_dataset(spec);
    data::save_dataset(cfg.out, ds);
    print(log::format("wrote %zu videos x %lld windows to %s", ds.videos.size(),
                      static_cast<long long>(spec.num_windows()), cfg.out.c_str()));
    return 0;
}

int cmd_pretrain_gaze(const RunConfig& cfg) {
    require(cfg.out, "--out");
    cfg.gaze.validate();
    const auto ds = load_data(cfg);
    auto opts = cfg.pretrain;
    opts.shuffle_seed = derive_seed(cfg.seed, "shuffle");

    gaze::GazeEstimator model{nullptr};
    std::string previous_log;
    const auto log_path = cfg.loss_log.empty() ? sibling(cfg.out, ".loss.csv") : cfg.loss_log;
    if (!cfg.resume.empty()) {
        gaze::GazeCheckpointInfo info;
        model = gaze::load_gaze_checkpoint(cfg.resume, &info);
        opts.start_epoch = info.epoch;
        opts.start_step = info.step;
        if (fs::exists(log_path)) {
            const auto bytes = io::read_file(log_path);
            previous_log.assign(bytes.begin(), bytes.end());
        }
        log::info(log::format("resuming from %s at epoch %lld", cfg.resume.c_str(), static_cast<long long>(info.epoch)));
    } else {
        torch::manual_seed(derive_seed(cfg.seed, "init"));
        model = gaze::GazeEstimator(cfg.gaze);
    }

    const auto items = ds.pretrain_items(model->config().heatmap_sigma);
    const auto records = gaze::pretrain_gaze(model, items, opts, [](const gaze::LossRecord& r) {
        log::info(log::format("epoch %lld nce %.4f kl %.4f total %.4f", static_cast<long long>(r.epoch), r.nce, r.kl,
                              r.total));
    });
    const auto epoch = records.empty() ? opts.start_epoch : records.back().epoch;
    const auto step = records.empty() ? opts.start_step : records.back().step;

    auto csv = gaze::loss_log_csv(records);
    if (!previous_log.empty()) csv = previous_log + csv.substr(csv.find('\n') + 1);
    io::write_file_atomic(log_path, csv);
    gaze::save_gaze_checkpoint(cfg.out, model, epoch, step);
    print(log::format("gaze checkpoint %s (epoch %lld), loss log %s", cfg.out.c_str(), static_cast<long long>(epoch),
                      log_path.c_str()));
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    require(cfg.out, "--out");
    cfg.grounding.validate();
    const auto ds = load_data(cfg);
    const auto samples = ds.query_samples();
    std::string hash;
    auto model = grounding::build_grounding_model(cfg.grounding, cfg.gaze_checkpoint, derive_seed(cfg.seed, "init"), &hash);

    grounding::FinetuneOptions opts;
    opts.shuffle_seed = derive_seed(cfg.seed, "shuffle");
    const auto records = grounding::finetune(model, samples, opts, [](const grounding::FinetuneRecord& r) {
        log::info(log::format("epoch %lld cls %.4f reg %.4f total %.4f", static_cast<long long>(r.epoch), r.cls, r.reg,
                              r.total));
    });
    const auto log_path = cfg.loss_log.empty() ? sibling(cfg.out, ".loss.csv") : cfg.loss_log;
    io::write_file_atomic(log_path, grounding::finetune_log_csv(records));
    grounding::save_grounding_checkpoint(cfg.out, model, hash, static_cast<int64_t>(records.size()),
                                         records.empty() ? 0 : records.back().step);
    print(log::format("grounding checkpoint %s (gaze mode %s, %s)", cfg.out.c_str(),
                      grounding::to_string(cfg.grounding.gaze_mode).c_str(),
                      cfg.grounding.gaze_mode == grounding::GazeMode::off
                          ? "no gaze"
                          : (cfg.grounding.freeze_gaze ? "gaze frozen, parameters verified unchanged" : "gaze trained")));
    return 0;
}

int cmd_predict(const RunConfig& cfg) {
    require(cfg.out, "--out");
    require(cfg.checkpoint, "--checkpoint");
    auto model = grounding::load_grounding_checkpoint(cfg.checkpoint);
    const auto ds = load_data(cfg);
    eval::PredictOptions opts;
    opts.nms = cfg.nms;
    opts.nms.method = eval::parse_soft_nms_method(cfg.nms_method);
    const auto file = eval::predict(model, ds.query_samples(), opts);
    const auto text = file.serialize();
    eval::validate_prediction_bytes(text);
    io::write_file_atomic(cfg.out, text);
    print(log::format("wrote predictions for %zu queries to %s", file.results.size(), cfg.out.c_str()));
    return 0;
}

int cmd_eval(const RunConfig& cfg) {
    require(cfg.predictions, "--predictions");
    const auto preds = eval::PredictionFile::load(cfg.predictions);
    const auto ds = load_data(cfg);
    const auto result = eval::evaluate(preds.ranked(), eval::ground_truth(ds.query_samples()));
    const auto csv = eval::metrics_csv(result);
    if (!cfg.out.empty()) io::write_file_atomic(cfg.out, csv);
    std::cout << csv << std::flush;
    return 0;
}

int cmd_ensemble(const RunConfig& cfg) {
    require(cfg.out, "--out");
    if (cfg.inputs.empty()) throw UsageError("ensemble needs at least one prediction file");
    std::vector<eval::PredictionFile> files;
    for (const auto& p : cfg.inputs) files.push_back(eval::PredictionFile::load(p));
    auto nms = cfg.nms;
    nms.method = eval::parse_soft_nms_method(cfg.nms_method);
    const auto merged = eval::ensemble_predictions(files, cfg.weights, nms);
    merged.save(cfg.out);
    print(log::format("ensembled %zu files into %s", files.size(), cfg.out.c_str()));
    return 0;
}

int cmd_plot_heatmaps(const RunConfig& cfg) {
    require(cfg.out, "--out");
    require(cfg.checkpoint, "--checkpoint");
    if (cfg.plot_videos < 0 || cfg.plot_windows_per_video < 1 || cfg.plot_scale < 1) {
        throw UsageError("plot-heatmaps: need --videos >= 0, --windows-per-video >= 1, --scale >= 1");
    }
    auto estimator = load_any_estimator(cfg.checkpoint);
    const auto ds = load_data(cfg);
    fs::create_directories(cfg.out);

    torch::NoGradGuard no_grad;
    size_t written = 0;
    const auto n_videos = std::min(ds.videos.size(), static_cast<size_t>(cfg.plot_videos));
    for (size_t i = 0; i < n_videos; ++i) {
        const auto gt = ds.window_heatmaps(i, estimator->config().heatmap_sigma);
        const auto pred = estimator->forward(EmbeddingSequence::dense(ds.videos[i].gaze_features)).heatmaps;
        auto windows = ds.in_segment_windows(i);
        if (windows.empty()) windows.push_back(gt.size(0) / 2);
        const auto k = std::min(windows.size(), static_cast<size_t>(cfg.plot_windows_per_video));
        for (size_t j = 0; j < k; ++j) {
            const auto w = windows[j * windows.size() / k];
            char stem[128];
            std::snprintf(stem, sizeof(stem), "%s_w%02lld", ds.videos[i].video_id.c_str(), static_cast<long long>(w));
            io::write_file_atomic(fs::path(cfg.out) / (std::string(stem) + "_gt.pgm"), pgm(gt[w], cfg.plot_scale));
            io::write_file_atomic(fs::path(cfg.out) / (std::string(stem) + "_pred.pgm"), pgm(pred[w], cfg.plot_scale));
            ++written;
        }
    }
    print(log::format("wrote %zu heatmap pairs to %s", written, cfg.out.c_str()));
    return 0;
}

int run(int argc, const char* const* argv) {
    log::init_from_env();
    RunConfig cfg;
    CLI::App app{"Gaze-guided natural-language temporal grounding at desk scale"};
    app.require_subcommand(1);
    app.fallthrough();
    app.config_formatter(std::make_shared<SnakeCaseIni>());
    app.set_config("--config", "", "INI config file; [section] names match subcommands, CLI flags win");
    app.add_option("--seed", cfg.seed, "Root seed for the data/init/shuffle substreams")->capture_default_str();
    app.add_option("--out", cfg.out, "Output artifact path (a directory for plot-heatmaps)");

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
    auto& s = cfg.data_spec;
    gen->add_option("--n-videos", s.n_videos)->capture_default_str();
    gen->add_option("--frames-per-video", s.frames_per_video)->capture_default_str();
    gen->add_option("--d-video", s.d_video)->capture_default_str();
    gen->add_option("--d-text", s.d_text)->capture_default_str();
    gen->add_option("--d-gaze", s.d_gaze)->capture_default_str();
    gen->add_option("--world-seed", s.world_seed)->capture_default_str();
    gen->add_option("--gaze-signal-strength", s.gaze_signal_strength)->capture_default_str();
    gen->add_option("--video-signal-strength", s.video_signal_strength)->capture_default_str();
    gen->add_option("--distractor-rate", s.distractor_rate)->capture_default_str();
    gen->add_option("--vocabulary-size", s.vocabulary_size)->capture_default_str();
    gen->add_option("--text-length", s.text_length)->capture_default_str();
    gen->add_option("--fps", s.fps)->capture_default_str();
    gen->add_option("--window", s.window)->capture_default_str();
    gen->add_option("--stride", s.stride)->capture_default_str();
    gen->add_option("--min-segment-windows", s.min_segment_windows)->capture_default_str();
    gen->add_option("--max-segment-windows", s.max_segment_windows)->capture_default_str();
    gen->add_option("--feature-amplitude", s.feature_amplitude)->capture_default_str();
    gen->add_option("--invalid-gaze-rate", s.invalid_gaze_rate)->capture_default_str();
    gen->add_option("--gaze-jitter", s.gaze_jitter)->capture_default_str();

    auto* pre = app.add_subcommand("pretrain-gaze", "Pretrain the gaze estimator");
    pre->add_option("--data", cfg.data_path, "Dataset file");
    pre->add_option("--resume", cfg.resume, "Gaze checkpoint to continue from");
    pre->add_option("--loss-log", cfg.loss_log, "Loss CSV (default: <out>.loss.csv)");
    pre->add_option("--lr", cfg.pretrain.lr)->capture_default_str();
    pre->add_option("--batch", cfg.pretrain.batch)->capture_default_str();
    pre->add_option("--epochs", cfg.pretrain.epochs)->capture_default_str();
    pre->add_option("--warmup-epochs", cfg.pretrain.warmup_epochs)->capture_default_str();
    pre->add_option("--weight-decay", cfg.pretrain.weight_decay)->capture_default_str();
    pre->add_option("--d-in", cfg.gaze.d_in)->capture_default_str();
    pre->add_option("--n-glu-layers", cfg.gaze.n_glu_layers)->capture_default_str();
    pre->add_option("--n-heads", cfg.gaze.n_heads)->capture_default_str();
    pre->add_option("--tau", cfg.gaze.tau)->capture_default_str();
    pre->add_flag("--learnable-tau", cfg.gaze.learnable_tau);
    pre->add_option("--heatmap-sigma", cfg.gaze.heatmap_sigma)->capture_default_str();
    pre->add_option("--conv-channels", cfg.gaze.conv_channels)->capture_default_str();

    auto* train = app.add_subcommand("train", "Train the grounding model");
    auto& g = cfg.grounding;
    train->add_option("--data", cfg.data_path, "Dataset file");
    train->add_option("--gaze-checkpoint", cfg.gaze_checkpoint, "Pretrained gaze checkpoint (not needed with --gaze-mode off)");
    train->add_option("--loss-log", cfg.loss_log, "Loss CSV (default: <out>.loss.csv)");
    train->add_option("--gaze-mode", g.gaze_mode, "off | positive | negative")
        ->transform(CLI::CheckedTransformer(std::map<std::string, grounding::GazeMode>{
            {"off", grounding::GazeMode::off},
            {"positive", grounding::GazeMode::positive},
            {"negative", grounding::GazeMode::negative}}));
    train->add_flag("--freeze-gaze,!--no-freeze-gaze", g.freeze_gaze, "Keep the gaze estimator fixed (default on)");
    train->add_option("--lr", g.lr)->capture_default_str();
    train->add_option("--batch", g.batch)->capture_default_str();
    train->add_option("--epochs", g.epochs)->capture_default_str();
    train->add_option("--warmup-epochs", g.warmup_epochs)->capture_default_str();
    train->add_option("--weight-decay", g.weight_decay)->capture_default_str();
    train->add_option("--n-heads", g.n_heads)->capture_default_str();
    train->add_option("--n-pyramid-levels", g.n_pyramid_levels)->capture_default_str();
    train->add_option("--d-video", g.d_video)->capture_default_str();
    train->add_option("--d-text", g.d_text)->capture_default_str();

    auto add_nms = [&](CLI::App* sub) {
        sub->add_option("--nms-method", cfg.nms_method, "gaussian | linear")->capture_default_str();
        sub->add_option("--nms-sigma", cfg.nms.sigma)->capture_default_str();
        sub->add_option("--score-floor", cfg.nms.score_floor)->capture_default_str();
        sub->add_option("--linear-overlap", cfg.nms.linear_overlap)->capture_default_str();
    };

    auto* predict = app.add_subcommand("predict", "Write a prediction file");
    predict->add_option("--checkpoint", cfg.checkpoint, "Grounding checkpoint");
    predict->add_option("--data", cfg.data_path, "Dataset file");
    add_nms(predict);

    auto* evaluate = app.add_subcommand("eval", "Recall@IoU of a prediction file");
    evaluate->add_option("--predictions", cfg.predictions, "Prediction file");
    evaluate->add_option("--data", cfg.data_path, "Dataset file holding the ground truth");

    auto* ensemble = app.add_subcommand("ensemble", "Merge prediction files with weighted Soft-NMS");
    ensemble->add_option("files", cfg.inputs, "Prediction files");
    ensemble->add_option("--weights", cfg.weights, "One weight per file (default uniform)")->delimiter(',');
    add_nms(ensemble);

    auto* plot = app.add_subcommand("plot-heatmaps", "Ground-truth vs predicted heatmaps as PGM pairs");
    plot->add_option("--checkpoint", cfg.checkpoint, "Gaze or grounding checkpoint");
    plot->add_option("--data", cfg.data_path, "Dataset file");
    plot->add_option("--videos", cfg.plot_videos, "Number of videos to sample")->capture_default_str();
    plot->add_option("--windows-per-video", cfg.plot_windows_per_video)->capture_default_str();
    plot->add_option("--scale", cfg.plot_scale, "Pixels per heatmap cell")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen->parsed()) return cmd_gen_data(cfg);
        if (pre->parsed()) return cmd_pretrain_gaze(cfg);
        if (train->parsed()) return cmd_train(cfg);
        if (predict->parsed()) return cmd_predict(cfg);
        if (evaluate->parsed()) return cmd_eval(cfg);
        if (ensemble->parsed()) return cmd_ensemble(cfg);
        if (plot->parsed()) return cmd_plot_heatmaps(cfg);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"gazenlq"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace gazenlq::cli
