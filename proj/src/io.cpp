#include "chain/io.hpp"

#include "chain/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <limits>
#include <set>
#include <sstream>

namespace chain::io {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) |
         static_cast<std::uint32_t>(b[off + 1]) << 8 |
         static_cast<std::uint32_t>(b[off + 2]) << 16 |
         static_cast<std::uint32_t>(b[off + 3]) << 24;
}

[[noreturn]] void format_error(std::size_t offset, const std::string& what) {
  throw FormatError("feature file: " + what + " (byte offset " +
                    std::to_string(offset) + ")");
}

// Key-checked access into a JSON object.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  template <class T>
  void opt(const char* key, T& dst) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      dst = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  template <class T>
  void req(const char* key, T& dst) {
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing key '" + key + "'");
    opt(key, dst);
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void reject_unknown() const {
    for (const auto& [k, _] : j_.items())
      if (!seen_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

BilevelConfig parse_bilevel(const json& j) {
  BilevelConfig b;
  ObjectReader r(j, "train.bilevel");
  r.opt("t1", b.t1);
  r.opt("t2", b.t2);
  r.opt("inner_lr", b.inner_lr);
  r.opt("outer_lr", b.outer_lr);
  std::string outer = b.outer_optimizer == OuterOptimizer::kAdam ? "adam" : "sgd";
  r.opt("outer_optimizer", outer);
  if (outer == "adam") b.outer_optimizer = OuterOptimizer::kAdam;
  else if (outer == "sgd") b.outer_optimizer = OuterOptimizer::kSgd;
  else throw ConfigError("train.bilevel.outer_optimizer must be adam or sgd");
  r.opt("lambda_init", b.lambda_init);
  r.opt("full_batch_limit", b.full_batch_limit);
  r.reject_unknown();
  return b;
}

TrainConfig parse_train(const json& j) {
  TrainConfig t;
  ObjectReader r(j, "train");
  r.opt("total_steps", t.total_steps);
  r.opt("lr", t.lr);
  std::string opt = "adam";
  r.opt("optimizer", opt);
  if (opt == "adam") t.main_optimizer = MainOptimizer::kAdam;
  else if (opt == "sgd_momentum") t.main_optimizer = MainOptimizer::kSgdMomentum;
  else throw ConfigError("train.optimizer must be adam or sgd_momentum");
  r.opt("batch_fraction", t.batch_fraction);
  r.opt("early_stop_patience", t.early_stop_patience);
  if (const json* b = r.child("bilevel")) t.bilevel = parse_bilevel(*b);
  r.reject_unknown();
  return t;
}

}  // namespace

std::vector<std::uint8_t> encode_features(const FeatureDataset& ds) {
  ds.validate();
  const auto n = static_cast<std::uint64_t>(ds.size());
  const auto d = static_cast<std::uint64_t>(ds.dim());
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (n > kMax || d > kMax) throw FormatError("dataset too large for u32 header");
  std::vector<std::uint8_t> out;
  out.reserve(kFeatureHeaderBytes + 4 * n * d + 4 * n);
  for (char ch : {'F', 'E', 'A', 'T'}) out.push_back(static_cast<std::uint8_t>(ch));
  out.push_back(kFeatureVersion);
  put_u32(out, static_cast<std::uint32_t>(n));
  put_u32(out, static_cast<std::uint32_t>(d));
  put_u32(out, static_cast<std::uint32_t>(ds.num_classes));
  for (Index i = 0; i < ds.size(); ++i)
    for (Index k = 0; k < ds.dim(); ++k)
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(ds.features(i, k))));
  for (int y : ds.labels) put_u32(out, static_cast<std::uint32_t>(y));
  return out;
}

FeatureDataset decode_features(const std::vector<std::uint8_t>& b,
                               const std::string& name) {
  if (b.size() < kFeatureHeaderBytes)
    format_error(b.size(), "truncated header");
  if (!(b[0] == 'F' && b[1] == 'E' && b[2] == 'A' && b[3] == 'T'))
    format_error(0, "bad magic");
  if (b[4] != kFeatureVersion)
    format_error(4, "unsupported version " + std::to_string(b[4]));
  const std::uint64_t n = get_u32(b, 5);
  const std::uint64_t d = get_u32(b, 9);
  const std::uint64_t c = get_u32(b, 13);
  if (n == 0) format_error(5, "n must be >= 1");
  if (d == 0) format_error(9, "d must be >= 1");
  if (c < 2 || c > static_cast<std::uint64_t>(std::numeric_limits<int>::max()))
    format_error(13, "class count must be >= 2");
  const std::uint64_t expected = kFeatureHeaderBytes + 4 * n * d + 4 * n;
  if (b.size() < expected)
    format_error(b.size(), "truncated payload, expected " +
                               std::to_string(expected) + " bytes");
  if (b.size() > expected) format_error(expected, "trailing bytes after labels");

  FeatureDataset ds;
  ds.name = name;
  ds.num_classes = static_cast<int>(c);
  ds.features.resize(static_cast<Index>(n), static_cast<Index>(d));
  std::size_t off = kFeatureHeaderBytes;
  for (Index i = 0; i < ds.features.rows(); ++i) {
    for (Index k = 0; k < ds.features.cols(); ++k, off += 4) {
      const float f = std::bit_cast<float>(get_u32(b, off));
      if (!std::isfinite(f)) format_error(off, "non-finite feature");
      ds.features(i, k) = f;
    }
  }
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i, off += 4) {
    const std::uint32_t y = get_u32(b, off);
    if (y >= c) format_error(off, "label " + std::to_string(y) + " >= c");
    ds.labels[i] = static_cast<int>(y);
  }
  return ds;
}

void write_features(const fs::path& path, const FeatureDataset& ds) {
  const auto bytes = encode_features(ds);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw FormatError("write failed: " + path.string());
}

FeatureDataset load_features(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open feature file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return decode_features(bytes, path.stem().string());
}

ExperimentConfig parse_experiment_config(const json& j) {
  ExperimentConfig cfg;
  ObjectReader r(j, "config");
  std::string strategy{to_string(cfg.strategy)};
  std::string trainer{to_string(cfg.trainer)};
  r.opt("strategy", strategy);
  r.opt("trainer", trainer);
  cfg.strategy = parse_query_strategy(strategy);
  cfg.trainer = parse_trainer_kind(trainer);
  r.opt("query_size", cfg.query_size);
  r.opt("total_budget", cfg.total_budget);
  r.opt("seeds", cfg.seeds);
  r.opt("val_size", cfg.val_size);
  r.opt("test_size", cfg.test_size);
  r.opt("grid", cfg.grid);
  if (const json* t = r.child("train")) cfg.train = parse_train(*t);
  r.reject_unknown();
  std::set<std::uint64_t> uniq(cfg.seeds.begin(), cfg.seeds.end());
  if (uniq.size() != cfg.seeds.size()) throw ConfigError("config: duplicate seeds");
  cfg.validate();
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  const BilevelConfig& b = cfg.train.bilevel;
  return {
      {"strategy", to_string(cfg.strategy)},
      {"trainer", to_string(cfg.trainer)},
      {"query_size", cfg.query_size},
      {"total_budget", cfg.total_budget},
      {"seeds", cfg.seeds},
      {"val_size", cfg.val_size},
      {"test_size", cfg.test_size},
      {"grid", cfg.grid},
      {"train",
       {{"total_steps", cfg.train.total_steps},
        {"lr", cfg.train.lr},
        {"optimizer", cfg.train.main_optimizer == MainOptimizer::kAdam
                          ? "adam"
                          : "sgd_momentum"},
        {"batch_fraction", cfg.train.batch_fraction},
        {"early_stop_patience", cfg.train.early_stop_patience},
        {"bilevel",
         {{"t1", b.t1},
          {"t2", b.t2},
          {"inner_lr", b.inner_lr},
          {"outer_lr", b.outer_lr},
          {"outer_optimizer",
           b.outer_optimizer == OuterOptimizer::kAdam ? "adam" : "sgd"},
          {"lambda_init", b.lambda_init},
          {"full_batch_limit", b.full_batch_limit}}}}},
  };
}

SynthSpec parse_synth_spec(const json& j) {
  SynthSpec s;
  ObjectReader r(j, "synth");
  r.req("num_classes", s.num_classes);
  r.req("dim", s.dim);
  r.req("class_separation", s.class_separation);
  r.req("within_class_stddev", s.within_class_stddev);
  r.req("points_per_class", s.points_per_class);
  r.opt("seed", s.seed);
  r.reject_unknown();
  return s;
}

json read_json_file(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string results_row(std::uint64_t seed, const RoundRecord& rec) {
  std::ostringstream os;
  os << seed << ',' << rec.round << ',' << rec.labeled_count << ','
     << format_double(rec.test_accuracy) << ',' << format_double(rec.val_ce)
     << ',' << format_double(rec.final_lambda) << ',' << rec.wall_ms();
  return os.str();
}

std::vector<ResultRow> read_results_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != kResultsHeader)
    throw FormatError(path.string() + ": missing or unexpected header");
  std::vector<ResultRow> rows;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7)
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected 7 columns");
    try {
      ResultRow r;
      r.seed = std::stoull(cells[0]);
      r.round = std::stoi(cells[1]);
      r.labeled_count = std::stoll(cells[2]);
      r.test_acc = std::stod(cells[3]);
      r.val_ce = std::stod(cells[4]);
      r.final_lambda = std::stod(cells[5]);
      r.wall_ms = std::stoll(cells[6]);
      rows.push_back(r);
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": malformed number");
    }
  }
  return rows;
}

std::vector<std::pair<std::uint64_t, double>> final_round_accuracy(
    const std::vector<ResultRow>& rows) {
  std::vector<std::pair<std::uint64_t, double>> out;
  std::vector<int> last_round;
  for (const ResultRow& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const auto& p) { return p.first == r.seed; });
    if (it == out.end()) {
      out.emplace_back(r.seed, r.test_acc);
      last_round.push_back(r.round);
    } else {
      const auto k = static_cast<std::size_t>(it - out.begin());
      if (r.round > last_round[k]) {
        last_round[k] = r.round;
        it->second = r.test_acc;
      }
    }
  }
  return out;
}

ResultsWriter::ResultsWriter(const fs::path& dir,
                             std::vector<std::uint64_t> seeds, int rounds)
    : dir_(dir), seeds_(std::move(seeds)), rounds_(rounds), slots_(seeds_.size()) {
  fs::create_directories(dir_);
  main_.open(dir_ / "results.csv", std::ios::trunc);
  if (!main_) throw ConfigError("cannot write " + (dir_ / "results.csv").string());
  main_ << kResultsHeader << '\n';
  main_.flush();
}

fs::path ResultsWriter::part_path(std::uint64_t seed) const {
  return dir_ / ("results.seed-" + std::to_string(seed) + ".part");
}

void ResultsWriter::on_round(std::uint64_t seed, const RoundRecord& rec) {
  std::lock_guard lock(mu_);
  const auto it = std::find(seeds_.begin(), seeds_.end(), seed);
  if (it == seeds_.end()) throw std::logic_error("unknown seed in results writer");
  const auto i = static_cast<std::size_t>(it - seeds_.begin());
  SeedSlot& slot = slots_[i];
  const std::string row = results_row(seed, rec);
  if (i == head_) {
    main_ << row << '\n';
    main_.flush();
  } else {
    if (!slot.part.is_open()) slot.part.open(part_path(seed), std::ios::trunc);
    slot.part << row << '\n';
    slot.part.flush();
    slot.pending.push_back(row);
  }
  if (rec.round == rounds_) {
    slot.done = true;
    drain();
  }
}

void ResultsWriter::drain() {
  while (head_ < slots_.size() && slots_[head_].done) {
    ++head_;
    if (head_ == slots_.size()) break;
    SeedSlot& next = slots_[head_];
    for (const std::string& row : next.pending) main_ << row << '\n';
    main_.flush();
    next.pending.clear();
    if (next.part.is_open()) {
      next.part.close();
      fs::remove(part_path(seeds_[head_]));
    }
  }
}

void ResultsWriter::finish() {
  std::lock_guard lock(mu_);
  main_.flush();
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i].part.is_open()) slots_[i].part.close();
    std::error_code ec;
    fs::remove(part_path(seeds_[i]), ec);
  }
}

json lambda_traj_json(const ExperimentResult& res) {
  json seeds = json::array();
  for (const SeedResult& s : res.per_seed) {
    json rounds = json::array();
    for (const RoundRecord& r : s.rounds) {
      json steps = json::array();
      json lambdas = json::array();
      for (const LambdaPoint& p : r.lambda_traj.points) {
        steps.push_back(p.step);
        lambdas.push_back(p.lambda);
      }
      rounds.push_back({{"round", r.round},
                        {"final_lambda", r.final_lambda},
                        {"steps", steps},
                        {"lambdas", lambdas}});
    }
    seeds.push_back({{"seed", s.seed}, {"rounds", rounds}});
  }
  return {{"trainer", to_string(res.config.trainer)},
          {"strategy", to_string(res.config.strategy)},
          {"seeds", seeds}};
}

}  // namespace chain::io
