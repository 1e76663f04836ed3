#include "chain/errors.hpp"
#include "chain/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace chain {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("chain_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

FeatureDataset random_dataset(std::mt19937_64& rng, Index n, Index d, int c) {
  std::normal_distribution<float> normal;
  std::uniform_int_distribution<int> label(0, c - 1);
  FeatureDataset ds;
  ds.features.resize(n, d);
  // Float-valued entries survive the binary32 payload exactly.
  for (Index i = 0; i < ds.features.size(); ++i) ds.features.data()[i] = normal(rng);
  for (Index i = 0; i < n; ++i) ds.labels.push_back(label(rng));
  ds.num_classes = c;
  return ds;
}

TEST(FeatureFile, RoundTripProperty) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const FeatureDataset ds = random_dataset(rng, 1 + trial * 3, 1 + trial % 7, 2 + trial % 5);
    const FeatureDataset back = io::decode_features(io::encode_features(ds));
    EXPECT_EQ(back.features, ds.features);
    EXPECT_EQ(back.labels, ds.labels);
    EXPECT_EQ(back.num_classes, ds.num_classes);
  }
}

TEST(FeatureFile, SinglePointLayout) {
  FeatureDataset ds;
  ds.features = Matrix::Constant(1, 1, 0.5);
  ds.labels = {1};
  ds.num_classes = 2;
  const auto bytes = io::encode_features(ds);
  ASSERT_EQ(bytes.size(), 25u);
  const std::vector<std::uint8_t> want = {
      'F', 'E', 'A', 'T', 0x01, 1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0,
      0x00, 0x00, 0x00, 0x3f,  // 0.5f
      1, 0, 0, 0};
  EXPECT_EQ(bytes, want);

  const fs::path dir = scratch("layout");
  io::write_features(dir / "one.feat", ds);
  EXPECT_EQ(fs::file_size(dir / "one.feat"), 25u);
  EXPECT_EQ(io::load_features(dir / "one.feat").labels, ds.labels);
}

TEST(FeatureFile, LabelEqualToClassCountRejected) {
  FeatureDataset ds;
  ds.features = Matrix::Zero(2, 1);
  ds.labels = {0, 1};
  ds.num_classes = 2;
  auto bytes = io::encode_features(ds);
  bytes[bytes.size() - 4] = 2;  // second label := c
  try {
    io::decode_features(bytes);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("offset 29"), std::string::npos) << e.what();
  }
}

TEST(FeatureFile, MalformedInputs) {
  FeatureDataset ds;
  ds.features = Matrix::Zero(3, 2);
  ds.labels = {0, 1, 0};
  ds.num_classes = 2;
  const auto good = io::encode_features(ds);

  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(io::decode_features(bad_magic), FormatError);

  auto truncated = good;
  truncated.pop_back();
  EXPECT_THROW(io::decode_features(truncated), FormatError);

  auto trailing = good;
  trailing.push_back(0);
  EXPECT_THROW(io::decode_features(trailing), FormatError);

  EXPECT_THROW(io::decode_features({'F', 'E', 'A'}), FormatError);

  auto nan = good;
  nan[17] = 0x00; nan[18] = 0x00; nan[19] = 0xc0; nan[20] = 0x7f;
  EXPECT_THROW(io::decode_features(nan), FormatError);

  EXPECT_THROW(io::load_features("/nonexistent/file.feat"), FormatError);
}

TEST(Config, ParsesFullDocument) {
  const json j = json::parse(R"({
    "strategy": "badge", "trainer": "fbr_gs", "query_size": 20,
    "total_budget": 200, "seeds": [1, 2, 3], "val_size": 50, "test_size": 100,
    "grid": [0.0, 1.0],
    "train": {"total_steps": 300, "lr": 0.002, "optimizer": "sgd_momentum",
              "batch_fraction": 0.2, "early_stop_patience": 4,
              "bilevel": {"t1": 2, "t2": 10, "inner_lr": 0.3, "outer_lr": 0.01,
                          "outer_optimizer": "sgd", "lambda_init": 0.5,
                          "full_batch_limit": 64}}})");
  const ExperimentConfig cfg = io::parse_experiment_config(j);
  EXPECT_EQ(cfg.strategy, QueryStrategy::kBadge);
  EXPECT_EQ(cfg.trainer, TrainerKind::kFbrGs);
  EXPECT_EQ(cfg.rounds(), 10);
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(cfg.train.main_optimizer, MainOptimizer::kSgdMomentum);
  EXPECT_EQ(cfg.train.bilevel.t2, 10);
  EXPECT_EQ(cfg.train.bilevel.outer_optimizer, OuterOptimizer::kSgd);
  EXPECT_EQ(cfg.train.bilevel.full_batch_limit, 64);
  // Echo parses back to the same document.
  EXPECT_EQ(io::to_json(io::parse_experiment_config(io::to_json(cfg))), io::to_json(cfg));
}

TEST(Config, DefaultsFromEmptyObject) {
  const ExperimentConfig cfg = io::parse_experiment_config(json::object());
  EXPECT_EQ(cfg.total_budget, 500);
  EXPECT_EQ(cfg.train.bilevel.t1, 1);
  EXPECT_EQ(cfg.train.bilevel.t2, 5);
  EXPECT_EQ(cfg.train.bilevel.outer_lr, 0.05);
  EXPECT_EQ(cfg.train.lr, 0.001);
}

TEST(Config, RejectsUnknownKeysAndBadTypes) {
  EXPECT_THROW(io::parse_experiment_config(json::parse(R"({"budget": 500})")), ConfigError);
  EXPECT_THROW(io::parse_experiment_config(json::parse(R"({"train": {"bilevel": {"t3": 1}}})")),
               ConfigError);
  EXPECT_THROW(io::parse_experiment_config(json::parse(R"({"query_size": "ten"})")), ConfigError);
  EXPECT_THROW(io::parse_experiment_config(json::parse(R"({"strategy": "margin"})")), ConfigError);
  EXPECT_THROW(io::parse_experiment_config(json::parse(R"({"seeds": [1, 1]})")), ConfigError);
  EXPECT_THROW(io::parse_experiment_config(json::parse("[]")), ConfigError);
}

TEST(SynthSpecJson, RequiredKeys) {
  const SynthSpec s = io::parse_synth_spec(json::parse(
      R"({"num_classes": 3, "dim": 4, "class_separation": 2.5,
          "within_class_stddev": 1.0, "points_per_class": 10, "seed": 7})"));
  EXPECT_EQ(s.num_classes, 3);
  EXPECT_EQ(s.seed, 7u);
  EXPECT_THROW(io::parse_synth_spec(json::parse(R"({"num_classes": 3})")), ConfigError);
}

TEST(Csv, SeventeenDigitRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    EXPECT_EQ(std::stod(io::format_double(v)), v);
  }
}

RoundRecord record(int round, double acc) {
  RoundRecord r;
  r.round = round;
  r.labeled_count = round * 10;
  r.test_accuracy = acc;
  r.val_ce = 1.0 / 3.0;
  r.final_lambda = -0.1;
  r.wall_us = 12345;
  return r;
}

TEST(ResultsWriter, OrdersSeedsAndCleansParts) {
  const fs::path dir = scratch("writer");
  io::ResultsWriter w(dir, {7, 3}, 2);
  // Seed 3 runs ahead of seed 7; its rows wait in a part file.
  w.on_round(3, record(1, 0.5));
  EXPECT_TRUE(fs::exists(dir / "results.seed-3.part"));
  w.on_round(7, record(1, 0.25));
  w.on_round(3, record(2, 0.75));
  {
    const auto rows = io::read_results_csv(dir / "results.csv");
    ASSERT_EQ(rows.size(), 1u);  // valid prefix while seed 7 is running
    EXPECT_EQ(rows[0].seed, 7u);
  }
  w.on_round(7, record(2, 0.125));
  w.finish();
  EXPECT_FALSE(fs::exists(dir / "results.seed-3.part"));
  const auto rows = io::read_results_csv(dir / "results.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].seed, 7u);
  EXPECT_EQ(rows[1].seed, 7u);
  EXPECT_EQ(rows[2].seed, 3u);
  EXPECT_EQ(rows[3].round, 2);
  EXPECT_EQ(rows[0].val_ce, 1.0 / 3.0);
  EXPECT_EQ(rows[0].wall_ms, 12);
  const auto fin = io::final_round_accuracy(rows);
  ASSERT_EQ(fin.size(), 2u);
  EXPECT_EQ(fin[0], (std::pair<std::uint64_t, double>{7, 0.125}));
  EXPECT_EQ(fin[1], (std::pair<std::uint64_t, double>{3, 0.75}));
}

TEST(ResultsCsv, RejectsBadHeader) {
  const fs::path dir = scratch("badcsv");
  std::ofstream(dir / "r.csv") << "a,b\n1,2\n";
  EXPECT_THROW(io::read_results_csv(dir / "r.csv"), FormatError);
}

}  // namespace
}  // namespace chain
