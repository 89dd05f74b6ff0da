#include "doctest_torch.hpp"

#include <cmath>

#include "gazenlq/core/binary_io.hpp"
#include "gazenlq/data/synthetic.hpp"

using namespace gazenlq;
using namespace gazenlq::data;

namespace {

SyntheticSpec small_spec(double strength = 0.9) {
    SyntheticSpec s;
    s.n_videos = 16;
    s.frames_per_video = 96;
    s.gaze_signal_strength = strength;
    return s;
}

/// Mean distance (in grid cells) between valid gaze points and the planted cell,
/// split by whether the frame falls inside the target segment.
std::pair<double, double> gaze_distance(const SyntheticDataset& ds) {
    double in_sum = 0.0, out_sum = 0.0;
    int64_t in_n = 0, out_n = 0;
    const double fps = ds.spec.fps;
    for (const auto& v : ds.videos) {
        for (const auto& p : v.gaze_track) {
            if (!p.valid) continue;
            const double dx = p.x * 64.0 - (static_cast<double>(v.planted_col) + 0.5);
            const double dy = p.y * 64.0 - (static_cast<double>(v.planted_row) + 0.5);
            const double d = std::sqrt(dx * dx + dy * dy);
            const double t = static_cast<double>(p.frame_index) / fps;
            if (t >= v.gt_interval.start + 0.3 && t < v.gt_interval.end - 0.3) {
                in_sum += d;
                ++in_n;
            } else if (t < v.gt_interval.start - 0.3 || t > v.gt_interval.end + 0.3) {
                out_sum += d;
                ++out_n;
            }
        }
    }
    return {in_sum / static_cast<double>(in_n), out_sum / static_cast<double>(out_n)};
}

}  // namespace

TEST_CASE("sixteen videos of 96 frames give five windows each") {
    auto ds = generate_dataset(small_spec());
    REQUIRE(ds.videos.size() == 16);
    for (size_t i = 0; i < ds.videos.size(); ++i) {
        const auto& v = ds.videos[i];
        CHECK(v.n_frames == 96);
        CHECK(v.video_features.sizes() == torch::IntArrayRef({5, 2304}));
        CHECK(v.gaze_features.sizes() == torch::IntArrayRef({5, 1536}));
        CHECK(v.text_embeddings.size(1) == 512);
        CHECK(v.gaze_track.size() == 96);
        CHECK(ds.window_heatmaps(i, 2.0).sizes() == torch::IntArrayRef({5, 64, 64}));
        CHECK(v.gt_interval.start >= 0.0);
        CHECK(v.gt_interval.end <= 5 * ds.spec.seconds_per_window() + 1e-9);
        CHECK(v.gt_interval.length() > 0.0);
        CHECK(v.query_text.find("object" + std::to_string(v.target)) != std::string::npos);
    }
    auto q = ds.query_sample(3);
    CHECK(q.video_id == ds.videos[3].video_id);
    CHECK(q.annotation_uid == ds.videos[3].video_id + "-q0");
    CHECK(q.seconds_per_window == doctest::Approx(16.0 / 30.0));
}

TEST_CASE("generation is deterministic in the seed") {
    auto a = generate_dataset(small_spec());
    auto b = generate_dataset(small_spec());
    CHECK(serialize_dataset(a) == serialize_dataset(b));
    auto other = small_spec();
    other.seed = 1;
    CHECK(serialize_dataset(generate_dataset(other)) != serialize_dataset(a));
}

TEST_CASE("gaze concentrates on the planted cell only when the signal is on") {
    auto spec = small_spec(0.9);
    spec.n_videos = 32;
    spec.frames_per_video = 272;
    auto [in_strong, out_strong] = gaze_distance(generate_dataset(spec));
    CHECK(in_strong < 0.5 * out_strong);

    spec.gaze_signal_strength = 0.0;
    auto [in_none, out_none] = gaze_distance(generate_dataset(spec));
    // Uniform gaze: both sides average roughly the same distance.
    CHECK(std::abs(in_none - out_none) < 0.15 * out_none);
}

TEST_CASE("in-segment windows lie inside the ground truth") {
    auto ds = generate_dataset(small_spec());
    const double spw = ds.spec.seconds_per_window();
    for (size_t i = 0; i < ds.videos.size(); ++i) {
        auto w = ds.in_segment_windows(i);
        CHECK_FALSE(w.empty());
        for (auto t : w) {
            CHECK(static_cast<double>(t) * spw >= ds.videos[i].gt_interval.start - 1e-9);
            CHECK(static_cast<double>(t + 1) * spw <= ds.videos[i].gt_interval.end + 1e-9);
        }
    }
}

TEST_CASE("binary round trip preserves every field") {
    auto ds = generate_dataset(small_spec());
    auto back = deserialize_dataset(serialize_dataset(ds));
    CHECK(back.spec.to_json() == ds.spec.to_json());
    REQUIRE(back.videos.size() == ds.videos.size());
    for (size_t i = 0; i < ds.videos.size(); ++i) CHECK(back.videos[i] == ds.videos[i]);

    auto path = std::filesystem::temp_directory_path() / "gazenlq_synth_roundtrip.bin";
    save_dataset(path, ds);
    CHECK(serialize_dataset(load_dataset(path)) == serialize_dataset(ds));
}

TEST_CASE("corrupted files are rejected") {
    auto bytes = serialize_dataset(generate_dataset(small_spec()));
    auto bad_magic = bytes;
    bad_magic[3] ^= 0xFF;
    CHECK_THROWS_AS(deserialize_dataset(bad_magic), io::VersionMismatch);
    auto truncated = bytes;
    truncated.resize(bytes.size() / 2);
    CHECK_THROWS_AS(deserialize_dataset(truncated), io::FormatError);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(deserialize_dataset(trailing), io::FormatError);
    CHECK_THROWS(load_dataset("/nonexistent/gazenlq.bin"));
}

TEST_CASE("empty datasets and slices") {
    auto spec = small_spec();
    spec.n_videos = 0;
    auto empty = generate_dataset(spec);
    CHECK(empty.videos.empty());
    CHECK(deserialize_dataset(serialize_dataset(empty)).videos.empty());

    auto ds = generate_dataset(small_spec());
    auto part = ds.slice(4, 10);
    REQUIRE(part.videos.size() == 6);
    CHECK(part.videos[0] == ds.videos[4]);
    CHECK_THROWS(ds.slice(10, 20));
}

TEST_CASE("spec validation and JSON round trip") {
    auto spec = small_spec();
    CHECK(SyntheticSpec::from_json(spec.to_json()).to_json() == spec.to_json());
    spec.gaze_signal_strength = 1.5;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = small_spec();
    spec.frames_per_video = 10;
    CHECK_THROWS_AS(spec.validate(), gaze::InsufficientFrames);
    spec = small_spec();
    spec.max_segment_windows = 1;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
