#pragma once

#include "chain/data.hpp"
#include "chain/orchestrator.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

namespace chain::io {

// Feature file layout (all little-endian):
//   "FEAT" 0x01 | n:u32 | d:u32 | c:u32 | n*d binary32 row-major | n u32 labels
inline constexpr std::size_t kFeatureHeaderBytes = 17;
inline constexpr std::uint8_t kFeatureVersion = 0x01;

std::vector<std::uint8_t> encode_features(const FeatureDataset& ds);
/// Throws FormatError naming the byte offset of the first problem.
FeatureDataset decode_features(const std::vector<std::uint8_t>& bytes,
                               const std::string& name = "");

void write_features(const std::filesystem::path& path, const FeatureDataset& ds);
FeatureDataset load_features(const std::filesystem::path& path);

/// JSON <-> config. Unknown keys and wrong types raise ConfigError.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
SynthSpec parse_synth_spec(const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

/// %.17g, round-trip exact for binary64.
std::string format_double(double v);

inline constexpr const char* kResultsHeader =
    "seed,round,labeled_count,test_acc,val_ce,final_lambda,wall_ms";

std::string results_row(std::uint64_t seed, const RoundRecord& rec);

struct ResultRow {
  std::uint64_t seed = 0;
  int round = 0;
  std::int64_t labeled_count = 0;
  double test_acc = 0.0;
  double val_ce = 0.0;
  double final_lambda = 0.0;
  std::int64_t wall_ms = 0;
};

/// Parses a results.csv (header required). Throws FormatError.
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

/// Last-round test accuracy per seed, in first-appearance order.
std::vector<std::pair<std::uint64_t, double>> final_round_accuracy(
    const std::vector<ResultRow>& rows);

/// Streams rows into <dir>/results.csv in config seed order, flushing per
/// round. Rows of a seed that is not yet at the head of the order are held
/// in <dir>/results.seed-<seed>.part until every earlier seed finishes.
/// Thread-safe.
class ResultsWriter {
 public:
  ResultsWriter(const std::filesystem::path& dir,
                std::vector<std::uint64_t> seeds, int rounds);

  void on_round(std::uint64_t seed, const RoundRecord& rec);
  /// Removes leftover part files. Call after every seed has finished.
  void finish();

 private:
  struct SeedSlot {
    std::vector<std::string> pending;
    std::ofstream part;
    bool done = false;
  };

  std::filesystem::path part_path(std::uint64_t seed) const;
  void drain();

  std::filesystem::path dir_;
  std::vector<std::uint64_t> seeds_;
  int rounds_;
  std::vector<SeedSlot> slots_;
  std::size_t head_ = 0;
  std::ofstream main_;
  std::mutex mu_;
};

nlohmann::json lambda_traj_json(const ExperimentResult& res);

}  // namespace chain::io
