#include "gazenlq/eval/prediction_file.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gazenlq/core/binary_io.hpp"

namespace gazenlq::eval {

namespace {

using ojson = nlohmann::ordered_json;

const ojson& require_key(const ojson& obj, size_t position, const char* key) {
    if (!obj.is_object()) throw SchemaError("expected a JSON object");
    if (obj.size() <= position) throw SchemaError(std::string("missing key '") + key + "'");
    auto it = obj.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(position));
    if (it.key() != key) {
        throw SchemaError("expected key '" + std::string(key) + "' at position " + std::to_string(position) + ", found '" +
                          it.key() + "'");
    }
    return it.value();
}

}  // namespace

std::string format_decimal(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    std::string s(buf);
    if (s == "-0.000000") s = "0.000000";
    while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
    return s;
}

std::string PredictionFile::serialize() const {
    std::ostringstream out;
    out << R"({"version": "1.0", "challenge": "ego4d_nlq_challenge", "results": [)";
    for (size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        if (i) out << ", ";
        out << R"({"clip_uid": )" << nlohmann::json(r.key.clip_uid).dump() << R"(, "annotation_uid": )"
            << nlohmann::json(r.key.annotation_uid).dump() << R"(, "query_idx": )" << r.key.query_idx
            << R"(, "predicted_times": [)";
        for (size_t j = 0; j < r.moments.size(); ++j) {
            const auto& m = r.moments[j];
            if (j) out << ", ";
            out << '[' << format_decimal(m.start_s) << ", " << format_decimal(m.end_s) << ", "
                << format_decimal(m.score) << ']';
        }
        out << "]}";
    }
    out << "]}\n";
    return out.str();
}

PredictionFile PredictionFile::parse(const std::string& text) {
    ojson doc;
    try {
        doc = ojson::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("prediction file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.size() != 3) throw SchemaError("prediction file must have exactly 3 top-level keys");
    if (require_key(doc, 0, "version") != "1.0") throw SchemaError("version must be \"1.0\"");
    if (require_key(doc, 1, "challenge") != "ego4d_nlq_challenge") {
        throw SchemaError("challenge must be \"ego4d_nlq_challenge\"");
    }
    const auto& results = require_key(doc, 2, "results");
    if (!results.is_array()) throw SchemaError("results must be an array");

    PredictionFile file;
    for (const auto& r : results) {
        if (!r.is_object() || r.size() != 4) throw SchemaError("each result must have exactly 4 keys");
        QueryPrediction q;
        const auto& clip = require_key(r, 0, "clip_uid");
        const auto& ann = require_key(r, 1, "annotation_uid");
        const auto& idx = require_key(r, 2, "query_idx");
        const auto& times = require_key(r, 3, "predicted_times");
        if (!clip.is_string() || !ann.is_string()) throw SchemaError("clip_uid / annotation_uid must be strings");
        if (!idx.is_number_integer()) throw SchemaError("query_idx must be an integer");
        if (!times.is_array()) throw SchemaError("predicted_times must be an array");
        if (static_cast<int64_t>(times.size()) > kMaxPredictionsPerQuery) {
            throw SchemaError("more than 5 predicted_times for " + clip.get<std::string>());
        }
        q.key = {clip.get<std::string>(), ann.get<std::string>(), idx.get<int64_t>()};
        for (const auto& t : times) {
            if (!t.is_array() || t.size() != 3 || !t[0].is_number() || !t[1].is_number() || !t[2].is_number()) {
                throw SchemaError("each predicted_times entry must be [start_s, end_s, score]");
            }
            q.moments.push_back({t[0].get<double>(), t[1].get<double>(), t[2].get<double>()});
        }
        file.results.push_back(std::move(q));
    }
    return file;
}

PredictionFile PredictionFile::load(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    return parse(std::string(bytes.begin(), bytes.end()));
}

void PredictionFile::save(const std::filesystem::path& path) const { io::write_file_atomic(path, serialize()); }

RankedPredictions PredictionFile::ranked() const {
    RankedPredictions out;
    for (const auto& r : results) out[r.key] = r.moments;
    return out;
}

void validate_prediction_bytes(const std::string& text) {
    const auto file = PredictionFile::parse(text);
    const auto canonical = file.serialize();
    if (canonical != text) {
        const auto mismatch = std::mismatch(canonical.begin(), canonical.end(), text.begin(), text.end());
        throw SchemaError("prediction file is not in canonical form (first difference at byte " +
                          std::to_string(std::distance(canonical.begin(), mismatch.first)) + ")");
    }
}

PredictionFile ensemble_predictions(const std::vector<PredictionFile>& files, std::vector<double> weights,
                                    const SoftNmsOptions& nms, int64_t top_k) {
    if (files.empty()) throw std::invalid_argument("ensemble: no prediction files");
    if (weights.empty()) weights.assign(files.size(), 1.0);
    if (weights.size() != files.size()) throw std::invalid_argument("ensemble: one weight per file required");
    const double max_w = *std::max_element(weights.begin(), weights.end());
    if (std::any_of(weights.begin(), weights.end(), [](double w) { return !(w >= 0.0); }) || !(max_w > 0.0)) {
        throw std::invalid_argument("ensemble: weights must be >= 0 with at least one > 0");
    }

    std::set<QueryKey> reference;
    for (const auto& r : files.front().results) reference.insert(r.key);
    for (size_t f = 1; f < files.size(); ++f) {
        std::set<QueryKey> other;
        for (const auto& r : files[f].results) other.insert(r.key);
        if (other != reference) {
            std::vector<QueryKey> diff;
            std::set_symmetric_difference(reference.begin(), reference.end(), other.begin(), other.end(),
                                          std::back_inserter(diff));
            std::string msg = "ensemble: query sets differ between file 0 and file " + std::to_string(f) + ":";
            for (const auto& k : diff) msg += " " + k.str();
            throw SchemaError(msg);
        }
    }

    std::map<QueryKey, std::vector<MomentPrediction>> pooled;
    for (size_t f = 0; f < files.size(); ++f) {
        const double w = weights[f] / max_w;
        if (w == 0.0) continue;
        for (const auto& r : files[f].results) {
            auto& pool = pooled[r.key];
            for (auto m : r.moments) {
                m.score *= w;
                pool.push_back(m);
            }
        }
    }

    PredictionFile out;
    for (const auto& r : files.front().results) {
        auto merged = soft_nms(pooled[r.key], nms);
        if (static_cast<int64_t>(merged.size()) > top_k) merged.resize(static_cast<size_t>(top_k));
        out.results.push_back({r.key, std::move(merged)});
    }
    return out;
}

}  // namespace gazenlq::eval
