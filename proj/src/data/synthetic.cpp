#include "gazenlq/data/synthetic.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "gazenlq/core/binary_io.hpp"
#include "gazenlq/core/seeding.hpp"

namespace gazenlq::data {

namespace {

constexpr char kMagic[8] = {'G', 'N', 'L', 'Q', 'D', 'S', '1', '\0'};

bool same_tensor(const torch::Tensor& a, const torch::Tensor& b) {
    if (a.defined() != b.defined()) return false;
    return !a.defined() || (a.sizes() == b.sizes() && torch::equal(a, b));
}

torch::Tensor unit_rows(torch::Tensor m) { return m / m.norm(2, -1, true); }

/// Everything shared by datasets generated from one world seed.
struct World {
    torch::Tensor gaze_dirs;   // [V, d_gaze], unit rows
    torch::Tensor video_dirs;  // [V, d_video], unit rows
    torch::Tensor words;       // [V + n_filler, d_text]
    std::vector<std::pair<int64_t, int64_t>> cells;  // (row, col)
    int64_t n_filler = 0;
};

World make_world(const SyntheticSpec& spec) {
    World w;
    auto gen = at::make_generator<at::CPUGeneratorImpl>(derive_seed(spec.world_seed, "world"));
    const auto v = spec.vocabulary_size;
    w.n_filler = 4 * v;
    w.gaze_dirs = unit_rows(torch::randn({v, spec.d_gaze}, gen));
    w.video_dirs = unit_rows(torch::randn({v, spec.d_video}, gen));
    w.words = torch::randn({v + w.n_filler, spec.d_text}, gen);

    std::mt19937_64 rng(derive_seed(spec.world_seed, "cells"));
    std::uniform_int_distribution<int64_t> coord(6, gaze::kHeatmapSide - 7);
    while (static_cast<int64_t>(w.cells.size()) < v) {
        std::pair<int64_t, int64_t> c{coord(rng), coord(rng)};
        // Keep planted cells apart so targets stay distinguishable.
        const bool close = std::any_of(w.cells.begin(), w.cells.end(), [&](const auto& o) {
            return std::abs(o.first - c.first) + std::abs(o.second - c.second) < 8;
        });
        if (!close || w.cells.size() > 64) w.cells.push_back(c);
    }
    return w;
}

/// Fraction of each window's frames that fall in [f0, f1).
std::vector<double> window_fractions(const SyntheticSpec& spec, int64_t t_windows, int64_t f0, int64_t f1) {
    std::vector<double> out(static_cast<size_t>(t_windows), 0.0);
    if (f1 <= f0) return out;
    for (int64_t t = 0; t < t_windows; ++t) {
        const auto lo = std::max(t * spec.stride, f0);
        const auto hi = std::min(t * spec.stride + spec.window, f1);
        out[static_cast<size_t>(t)] = static_cast<double>(std::max<int64_t>(0, hi - lo)) / static_cast<double>(spec.window);
    }
    return out;
}

torch::Tensor plant(const std::vector<double>& fractions, const torch::Tensor& direction, double scale) {
    auto f = torch::tensor(std::vector<float>(fractions.begin(), fractions.end()), torch::kFloat32);
    return f.unsqueeze(1) * direction.unsqueeze(0) * scale;
}

SyntheticVideo make_video(const SyntheticSpec& spec, const World& world, int64_t index) {
    const auto video_seed = derive_seed(derive_seed(spec.seed, "data"), static_cast<uint64_t>(index));
    std::mt19937_64 rng(video_seed);
    auto gen = at::make_generator<at::CPUGeneratorImpl>(derive_seed(video_seed, "tensors"));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, spec.gaze_jitter);

    const auto t_windows = spec.num_windows();
    const double spw = spec.seconds_per_window();
    SyntheticVideo v;
    char id[32];
    std::snprintf(id, sizeof(id), "vid%05lld", static_cast<long long>(index));
    v.video_id = id;
    v.n_frames = spec.frames_per_video;
    v.target = std::uniform_int_distribution<int64_t>(0, spec.vocabulary_size - 1)(rng);
    std::tie(v.planted_row, v.planted_col) = world.cells[static_cast<size_t>(v.target)];

    const auto max_len = std::min(spec.max_segment_windows, t_windows);
    const auto min_len = std::min(spec.min_segment_windows, max_len);
    const auto seg_len = std::uniform_int_distribution<int64_t>(min_len, max_len)(rng);
    const auto a = std::uniform_int_distribution<int64_t>(0, t_windows - seg_len)(rng);
    v.gt_interval = {static_cast<double>(a) * spw, static_cast<double>(a + seg_len) * spw};

    int64_t d = -1;
    if (unit(rng) < spec.distractor_rate) {
        std::vector<int64_t> starts;
        for (int64_t s = 0; s + seg_len <= t_windows; ++s) {
            if (s + seg_len < a || s > a + seg_len) starts.push_back(s);
        }
        if (!starts.empty()) {
            d = starts[std::uniform_int_distribution<size_t>(0, starts.size() - 1)(rng)];
            v.distractor = {static_cast<double>(d) * spw, static_cast<double>(d + seg_len) * spw};
        }
    }

    // Window t's time span is centered on its middle `stride` frames.
    const auto offset = (spec.window - spec.stride) / 2;
    const auto f0 = a * spec.stride + offset;
    const auto f1 = (a + seg_len) * spec.stride + offset;
    const double s = spec.gaze_signal_strength;
    const double cx = static_cast<double>(v.planted_col) / gaze::kHeatmapSide;
    const double cy = static_cast<double>(v.planted_row) / gaze::kHeatmapSide;
    v.gaze_track.reserve(static_cast<size_t>(v.n_frames));
    for (int64_t f = 0; f < v.n_frames; ++f) {
        gaze::GazePoint p;
        p.frame_index = f;
        p.valid = unit(rng) >= spec.invalid_gaze_rate;
        const bool planted = f >= f0 && f < f1 && unit(rng) < s;
        if (planted) {
            p.x = static_cast<float>(std::clamp(cx + jitter(rng), 0.0, 1.0));
            p.y = static_cast<float>(std::clamp(cy + jitter(rng), 0.0, 1.0));
        } else {
            p.x = static_cast<float>(unit(rng));
            p.y = static_cast<float>(unit(rng));
        }
        v.gaze_track.push_back(p);
    }

    const auto seg_frac = window_fractions(spec, t_windows, f0, f1);
    const auto dis_frac = d < 0 ? std::vector<double>(static_cast<size_t>(t_windows), 0.0)
                                : window_fractions(spec, t_windows, d * spec.stride + offset,
                                                   (d + seg_len) * spec.stride + offset);
    const auto target = v.target;
    v.gaze_features = torch::randn({t_windows, spec.d_gaze}, gen) +
                      plant(seg_frac, world.gaze_dirs[target], s * spec.feature_amplitude);
    const double vs = spec.video_signal_strength * spec.feature_amplitude;
    v.video_features = torch::randn({t_windows, spec.d_video}, gen) + plant(seg_frac, world.video_dirs[target], vs) +
                       plant(dis_frac, world.video_dirs[target], vs);

    const auto slot = std::uniform_int_distribution<int64_t>(0, spec.text_length - 1)(rng);
    std::uniform_int_distribution<int64_t> filler(0, world.n_filler - 1);
    std::vector<torch::Tensor> tokens;
    v.query_text = "";
    for (int64_t l = 0; l < spec.text_length; ++l) {
        int64_t word = 0;
        std::string name;
        if (l == slot) {
            word = target;
            name = "object" + std::to_string(target);
        } else {
            const auto j = filler(rng);
            word = spec.vocabulary_size + j;
            name = "word" + std::to_string(j);
        }
        tokens.push_back(world.words[word]);
        v.query_text += (l ? " " : "") + name;
    }
    v.text_embeddings = torch::stack(tokens) + 0.1 * torch::randn({spec.text_length, spec.d_text}, gen);
    return v;
}

void write_array(io::ByteWriter& w, const torch::Tensor& t) {
    w.u32(static_cast<uint32_t>(t.dim()));
    for (auto s : t.sizes()) w.u64(static_cast<uint64_t>(s));
    w.f32_tensor(t);
}

torch::Tensor read_array(io::ByteReader& r) {
    const auto ndim = r.u32();
    if (ndim > 8) throw io::FormatError("dataset: implausible array rank " + std::to_string(ndim));
    std::vector<int64_t> shape;
    for (uint32_t i = 0; i < ndim; ++i) shape.push_back(static_cast<int64_t>(r.u64()));
    return r.f32_tensor(shape);
}

}  // namespace

void SyntheticSpec::validate() const {
    if (n_videos < 0) throw std::invalid_argument("synthetic spec: n_videos must be >= 0");
    if (frames_per_video < 1 || d_video < 1 || d_text < 1 || d_gaze < 1 || vocabulary_size < 1 || text_length < 1) {
        throw std::invalid_argument("synthetic spec: counts and widths must be >= 1");
    }
    if (!(gaze_signal_strength >= 0.0 && gaze_signal_strength <= 1.0)) {
        throw std::invalid_argument("synthetic spec: gaze_signal_strength must be in [0, 1]");
    }
    if (!(video_signal_strength >= 0.0)) throw std::invalid_argument("synthetic spec: video_signal_strength must be >= 0");
    if (!(distractor_rate >= 0.0 && distractor_rate <= 1.0)) {
        throw std::invalid_argument("synthetic spec: distractor_rate must be in [0, 1]");
    }
    if (!(gaze_jitter >= 0.0)) throw std::invalid_argument("synthetic spec: gaze_jitter must be >= 0");
    if (!(invalid_gaze_rate >= 0.0 && invalid_gaze_rate < 1.0)) {
        throw std::invalid_argument("synthetic spec: invalid_gaze_rate must be in [0, 1)");
    }
    if (!(fps > 0.0) || window < 1 || stride < 1 || stride > window) {
        throw std::invalid_argument("synthetic spec: need fps > 0 and 0 < stride <= window");
    }
    if (frames_per_video < window) throw gaze::InsufficientFrames("synthetic spec: frames_per_video < window");
    if (min_segment_windows < 1 || max_segment_windows < min_segment_windows) {
        throw std::invalid_argument("synthetic spec: need 1 <= min_segment_windows <= max_segment_windows");
    }
}

nlohmann::json SyntheticSpec::to_json() const {
    return {{"n_videos", n_videos},
            {"frames_per_video", frames_per_video},
            {"d_video", d_video},
            {"d_text", d_text},
            {"d_gaze", d_gaze},
            {"seed", seed},
            {"world_seed", world_seed},
            {"gaze_signal_strength", gaze_signal_strength},
            {"video_signal_strength", video_signal_strength},
            {"distractor_rate", distractor_rate},
            {"vocabulary_size", vocabulary_size},
            {"text_length", text_length},
            {"fps", fps},
            {"window", window},
            {"stride", stride},
            {"min_segment_windows", min_segment_windows},
            {"max_segment_windows", max_segment_windows},
            {"feature_amplitude", feature_amplitude},
            {"invalid_gaze_rate", invalid_gaze_rate},
            {"gaze_jitter", gaze_jitter}};
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
    SyntheticSpec s;
    s.n_videos = j.at("n_videos").get<int64_t>();
    s.frames_per_video = j.at("frames_per_video").get<int64_t>();
    s.d_video = j.at("d_video").get<int64_t>();
    s.d_text = j.at("d_text").get<int64_t>();
    s.d_gaze = j.at("d_gaze").get<int64_t>();
    s.seed = j.at("seed").get<uint64_t>();
    s.world_seed = j.at("world_seed").get<uint64_t>();
    s.gaze_signal_strength = j.at("gaze_signal_strength").get<double>();
    s.video_signal_strength = j.at("video_signal_strength").get<double>();
    s.distractor_rate = j.at("distractor_rate").get<double>();
    s.vocabulary_size = j.at("vocabulary_size").get<int64_t>();
    s.text_length = j.at("text_length").get<int64_t>();
    s.fps = j.at("fps").get<double>();
    s.window = j.at("window").get<int64_t>();
    s.stride = j.at("stride").get<int64_t>();
    s.min_segment_windows = j.at("min_segment_windows").get<int64_t>();
    s.max_segment_windows = j.at("max_segment_windows").get<int64_t>();
    s.feature_amplitude = j.at("feature_amplitude").get<double>();
    s.invalid_gaze_rate = j.at("invalid_gaze_rate").get<double>();
    s.gaze_jitter = j.at("gaze_jitter").get<double>();
    s.validate();
    return s;
}

int64_t SyntheticSpec::num_windows() const { return gaze::window_count(frames_per_video, window, stride); }

bool SyntheticVideo::operator==(const SyntheticVideo& o) const {
    return video_id == o.video_id && target == o.target && planted_row == o.planted_row &&
           planted_col == o.planted_col && n_frames == o.n_frames && query_text == o.query_text &&
           gt_interval == o.gt_interval && distractor == o.distractor && gaze_track == o.gaze_track &&
           same_tensor(video_features, o.video_features) && same_tensor(gaze_features, o.gaze_features) &&
           same_tensor(text_embeddings, o.text_embeddings);
}

grounding::QuerySample SyntheticDataset::query_sample(size_t i) const {
    const auto& v = videos.at(i);
    grounding::QuerySample s;
    s.video_id = v.video_id;
    s.annotation_uid = v.video_id + "-q0";
    s.query_idx = 0;
    s.query_text = v.query_text;
    s.text_embeddings = v.text_embeddings;
    s.video_features = v.video_features;
    s.gaze_features = v.gaze_features;
    s.gt_interval = v.gt_interval;
    s.seconds_per_window = spec.seconds_per_window();
    return s;
}

std::vector<grounding::QuerySample> SyntheticDataset::query_samples() const {
    std::vector<grounding::QuerySample> out;
    for (size_t i = 0; i < videos.size(); ++i) out.push_back(query_sample(i));
    return out;
}

torch::Tensor SyntheticDataset::window_heatmaps(size_t i, double sigma) const {
    const auto& v = videos.at(i);
    return gaze::window_heatmaps(v.gaze_track, v.n_frames, sigma, spec.window, spec.stride);
}

std::vector<gaze::GazePretrainItem> SyntheticDataset::pretrain_items(double sigma) const {
    std::vector<gaze::GazePretrainItem> out;
    for (size_t i = 0; i < videos.size(); ++i) {
        out.push_back({videos[i].video_id, videos[i].gaze_features, window_heatmaps(i, sigma)});
    }
    return out;
}

std::vector<int64_t> SyntheticDataset::in_segment_windows(size_t i) const {
    const auto& v = videos.at(i);
    const double spw = spec.seconds_per_window();
    std::vector<int64_t> out;
    for (int64_t t = 0; t < v.gaze_features.size(0); ++t) {
        const double lo = static_cast<double>(t) * spw;
        if (lo >= v.gt_interval.start - 1e-9 && lo + spw <= v.gt_interval.end + 1e-9) out.push_back(t);
    }
    return out;
}

SyntheticDataset SyntheticDataset::slice(size_t begin, size_t end) const {
    if (begin > end || end > videos.size()) throw std::out_of_range("SyntheticDataset::slice: bad range");
    SyntheticDataset out{spec, {videos.begin() + static_cast<std::ptrdiff_t>(begin),
                                videos.begin() + static_cast<std::ptrdiff_t>(end)}};
    out.spec.n_videos = static_cast<int64_t>(end - begin);
    return out;
}

SyntheticDataset generate_dataset(const SyntheticSpec& spec) {
    spec.validate();
    const auto world = make_world(spec);
    SyntheticDataset ds{spec, {}};
    ds.videos.reserve(static_cast<size_t>(spec.n_videos));
    for (int64_t i = 0; i < spec.n_videos; ++i) ds.videos.push_back(make_video(spec, world, i));
    return ds;
}

std::vector<uint8_t> serialize_dataset(const SyntheticDataset& dataset) {
    io::ByteWriter w;
    w.raw(std::string_view(kMagic, sizeof(kMagic)));
    w.long_str(nlohmann::json{{"spec", dataset.spec.to_json()}}.dump());
    w.u32(static_cast<uint32_t>(dataset.videos.size()));
    for (const auto& v : dataset.videos) {
        w.str(v.video_id);
        w.i32(static_cast<int32_t>(v.target));
        w.i32(static_cast<int32_t>(v.planted_row));
        w.i32(static_cast<int32_t>(v.planted_col));
        w.i32(static_cast<int32_t>(v.n_frames));
        w.str(v.query_text);
        w.f64(v.gt_interval.start);
        w.f64(v.gt_interval.end);
        w.f64(v.distractor.start);
        w.f64(v.distractor.end);
        write_array(w, v.video_features);
        write_array(w, v.gaze_features);
        write_array(w, v.text_embeddings);
        w.u32(static_cast<uint32_t>(v.gaze_track.size()));
        for (const auto& p : v.gaze_track) {
            w.i32(static_cast<int32_t>(p.frame_index));
            w.f32(p.x);
            w.f32(p.y);
            w.u8(p.valid ? 1 : 0);
        }
    }
    return w.bytes();
}

SyntheticDataset deserialize_dataset(std::vector<uint8_t> bytes) {
    io::ByteReader r(std::move(bytes));
    if (r.remaining() < sizeof(kMagic) || r.raw(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
        throw io::VersionMismatch("dataset: bad magic (expected GNLQDS1)");
    }
    SyntheticDataset ds;
    try {
        ds.spec = SyntheticSpec::from_json(nlohmann::json::parse(r.long_str()).at("spec"));
    } catch (const nlohmann::json::exception& e) {
        throw io::FormatError(std::string("dataset: bad metadata: ") + e.what());
    }
    const auto n = r.u32();
    for (uint32_t i = 0; i < n; ++i) {
        SyntheticVideo v;
        v.video_id = r.str();
        v.target = r.i32();
        v.planted_row = r.i32();
        v.planted_col = r.i32();
        v.n_frames = r.i32();
        v.query_text = r.str();
        v.gt_interval.start = r.f64();
        v.gt_interval.end = r.f64();
        v.distractor.start = r.f64();
        v.distractor.end = r.f64();
        v.video_features = read_array(r);
        v.gaze_features = read_array(r);
        v.text_embeddings = read_array(r);
        const auto n_points = r.u32();
        if (n_points > r.remaining()) throw io::FormatError("dataset: truncated gaze track");
        v.gaze_track.reserve(n_points);
        for (uint32_t k = 0; k < n_points; ++k) {
            gaze::GazePoint p;
            p.frame_index = r.i32();
            p.x = r.f32();
            p.y = r.f32();
            p.valid = r.u8() != 0;
            v.gaze_track.push_back(p);
        }
        ds.videos.push_back(std::move(v));
    }
    if (!r.at_end()) throw io::FormatError("dataset: trailing bytes after last record");
    return ds;
}

void save_dataset(const std::filesystem::path& path, const SyntheticDataset& dataset) {
    io::write_file_atomic(path, serialize_dataset(dataset));
}

SyntheticDataset load_dataset(const std::filesystem::path& path) { return deserialize_dataset(io::read_file(path)); }

}  // namespace gazenlq::data
