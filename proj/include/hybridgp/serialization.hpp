#pragma once

#include <string>

#include <json.hpp>

#include "hybridgp/dataset.hpp"
#include "hybridgp/evaluation.hpp"
#include "hybridgp/hybrid_model.hpp"
#include "hybridgp/prediction.hpp"

namespace hybridgp {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kModelFormatVersion = 1;
inline constexpr int kTraceFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;

nlohmann::json vec_to_json(const Vec& v);
Vec vec_from_json(const nlohmann::json& j);
/// Row-major nested arrays.
nlohmann::json mat_to_json(const Mat& m);
Mat mat_from_json(const nlohmann::json& j);

/// Columns: trial_id, t, x_0.., u_0.., x_next_0.., true_mode. A sidecar at
/// `path + ".json"` holds the format version, dims and `metadata`.
void write_dataset_csv(const Dataset& data, const nlohmann::json& metadata, const std::string& path);
/// Throws IoError with the offending line number on malformed input, or
/// when the sidecar is missing or has an unknown version.
Dataset read_dataset_csv(const std::string& path);

nlohmann::json model_to_json(const HybridModel& model);
HybridModel model_from_json(const nlohmann::json& j);
/// Model archive with a format version and free-form metadata.
void save_model(const HybridModel& model, const nlohmann::json& metadata, const std::string& path);
HybridModel load_model(const std::string& path);

/// CSV rows (t, segment_id, mode, weight, mean_*, var_*) plus a JSON sidecar
/// at `path + ".json"` carrying the format version, metadata and, when
/// `full_covariance` is set, every full covariance.
void write_trace(const PredictionTrace& trace, const nlohmann::json& metadata, const std::string& path,
                 bool full_covariance = true);
/// Covariances come from the sidecar when present, else the CSV diagonal.
PredictionTrace read_trace(const std::string& path);

nlohmann::json report_to_json(const ScoreReport& r);

/// Reads a whole file; IoError if it cannot be opened.
std::string read_file(const std::string& path);
/// Writes atomically enough for our purposes: truncate, write, check.
void write_file(const std::string& path, const std::string& contents);
/// Parses JSON, reporting line/column on failure.
nlohmann::json parse_json(const std::string& text, const std::string& what);

}  // namespace hybridgp
