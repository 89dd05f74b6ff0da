#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gazenlq/data/synthetic.hpp"
#include "gazenlq/eval/moments.hpp"
#include "gazenlq/gaze/estimator.hpp"
#include "gazenlq/gaze/pretrain.hpp"
#include "gazenlq/grounding/model.hpp"

namespace gazenlq::cli {

/// Everything a subcommand may read. Filled from the config file first, then
/// from command-line flags of the same names.
struct RunConfig {
    std::string config_path;
    uint64_t seed = 0;
    std::string out;

    data::SyntheticSpec data_spec;
    gaze::GazeEstimatorConfig gaze;
    gaze::PretrainOptions pretrain;
    grounding::GroundingConfig grounding;
    eval::SoftNmsOptions nms;
    std::string nms_method = "gaussian";

    std::string data_path;
    std::string gaze_checkpoint;
    std::string checkpoint;
    std::string resume;
    std::string loss_log;
    std::string predictions;
    std::vector<std::string> inputs;
    std::vector<double> weights;

    int64_t plot_videos = 4;
    int64_t plot_windows_per_video = 2;
    int64_t plot_scale = 4;
};

/// Each command writes its artifact atomically and returns 0, or throws.
int cmd_gen_data(const RunConfig& cfg);
int cmd_pretrain_gaze(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_predict(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_ensemble(const RunConfig& cfg);
int cmd_plot_heatmaps(const RunConfig& cfg);

/// Parses arguments, dispatches the chosen subcommand and maps failures to a
/// nonzero exit code (2 for usage / config errors, 1 otherwise).
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace gazenlq::cli
