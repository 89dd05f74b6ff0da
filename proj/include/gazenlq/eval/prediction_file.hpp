#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazenlq/eval/moments.hpp"
#include "gazenlq/eval/recall.hpp"

namespace gazenlq::eval {

inline constexpr int64_t kMaxPredictionsPerQuery = 5;

class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct QueryPrediction {
    QueryKey key;
    std::vector<MomentPrediction> moments;  // ranked, at most 5
};

/// Challenge-format prediction file. Canonical bytes:
///   {"version": "1.0", "challenge": "ego4d_nlq_challenge", "results": [
///    {"clip_uid": .., "annotation_uid": .., "query_idx": .., "predicted_times": [[s, e, score], ..]}, ..]}
/// on one line with a trailing newline; numbers printed with at most six
/// decimals (trailing zeros trimmed, at least one kept).
struct PredictionFile {
    std::vector<QueryPrediction> results;

    std::string serialize() const;
    /// Parses and checks the schema (key order, types, <= 5 moments per query).
    static PredictionFile parse(const std::string& text);
    static PredictionFile load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    RankedPredictions ranked() const;
};

/// Throws SchemaError unless `text` is exactly the canonical serialization
/// of a schema-valid prediction file.
void validate_prediction_bytes(const std::string& text);

/// Decimal rendering used for every float in the file.
std::string format_decimal(double value);

/// Pools every file's moments per query with scores scaled by weight / max(weight),
/// runs Soft-NMS and keeps the top `top_k`. Empty `weights` means uniform.
/// Throws SchemaError listing the symmetric difference when query sets differ.
PredictionFile ensemble_predictions(const std::vector<PredictionFile>& files, std::vector<double> weights,
                                    const SoftNmsOptions& nms = {}, int64_t top_k = kMaxPredictionsPerQuery);

}  // namespace gazenlq::eval
