// chain: active-learning experiments with a curriculum-tuned Firth penalty.

#include "chain/errors.hpp"
#include "chain/io.hpp"
#include "chain/orchestrator.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace chain;

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kData = 2, kNumeric = 3 };

unsigned worker_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CHAIN_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
    } catch (const std::exception&) {
      throw ConfigError("CHAIN_THREADS must be a positive integer");
    }
  }
  return n;
}

int cmd_run(const std::string& config_path, const std::string& features_path,
            const std::string& out_dir, bool no_timing) {
  const ExperimentConfig cfg =
      io::parse_experiment_config(io::read_json_file(config_path));
  const FeatureDataset ds = io::load_features(features_path);
  ds.validate();

  io::ResultsWriter writer(out_dir, cfg.seeds, cfg.rounds());
  RunOptions opts;
  opts.threads = worker_threads();
  opts.on_round = [&](std::uint64_t seed, const RoundRecord& rec) {
    if (no_timing) {
      RoundRecord untimed = rec;
      untimed.wall_us = 0;
      writer.on_round(seed, untimed);
    } else {
      writer.on_round(seed, rec);
    }
    std::fprintf(stderr, "seed %llu round %d/%d labeled=%lld acc=%.4f lambda=%.4f\n",
                 static_cast<unsigned long long>(seed), rec.round, cfg.rounds(),
                 static_cast<long long>(rec.labeled_count), rec.test_accuracy,
                 rec.final_lambda);
  };
  const ExperimentResult res = run_experiment(cfg, ds, opts);
  writer.finish();

  std::ofstream traj(fs::path(out_dir) / "lambda_traj.json");
  traj << io::lambda_traj_json(res).dump(1) << '\n';
  std::printf("final accuracy %s +- %s over %zu seed(s)\n",
              io::format_double(res.final_acc_mean).c_str(),
              io::format_double(res.final_acc_stddev).c_str(),
              res.per_seed.size());
  return kOk;
}

int cmd_synth(const std::string& spec_path, const std::string& out_path) {
  const SynthSpec spec = io::parse_synth_spec(io::read_json_file(spec_path));
  io::write_features(out_path, synth_gaussian_mixture(spec));
  return kOk;
}

int cmd_compare(const std::string& a_path, const std::string& b_path) {
  const auto a = io::final_round_accuracy(io::read_results_csv(a_path));
  const auto b = io::final_round_accuracy(io::read_results_csv(b_path));
  std::vector<double> va, vb;
  for (const auto& [seed, acc] : a) {
    auto it = std::find_if(b.begin(), b.end(),
                           [&](const auto& p) { return p.first == seed; });
    if (it == b.end())
      throw ConfigError("seed " + std::to_string(seed) + " missing from " + b_path);
    va.push_back(acc);
    vb.push_back(it->second);
  }
  if (a.size() != b.size()) throw ConfigError("result files cover different seeds");
  const TTest t = paired_t(va, vb);
  std::printf("t=%s dof=%d\n", io::format_double(t.t).c_str(), t.dof);
  return kOk;
}

int cmd_csvcat(const std::vector<std::string>& inputs, const std::string& out_path) {
  std::ofstream out;
  std::ostream* os = &std::cout;
  if (!out_path.empty()) {
    out.open(out_path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + out_path);
    os = &out;
  }
  *os << "source," << io::kResultsHeader << '\n';
  for (const std::string& in : inputs) {
    const std::string source = fs::path(in).parent_path().filename().string().empty()
                                   ? fs::path(in).stem().string()
                                   : fs::path(in).parent_path().filename().string();
    for (const io::ResultRow& r : io::read_results_csv(in)) {
      *os << source << ',' << r.seed << ',' << r.round << ',' << r.labeled_count << ','
          << io::format_double(r.test_acc) << ',' << io::format_double(r.val_ce) << ','
          << io::format_double(r.final_lambda) << ',' << r.wall_ms << '\n';
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool-based active learning with a curriculum Firth penalty"};
  app.require_subcommand(1);

  std::string config, features, out_dir = ".";
  auto* run = app.add_subcommand("run", "run an active-learning experiment");
  run->add_option("--config", config, "experiment config (JSON)")->required();
  run->add_option("--features", features, "feature file")->required();
  run->add_option("--out", out_dir, "output directory");
  bool no_timing = false;
  run->add_flag("--no-timing", no_timing, "write wall_ms as 0 (byte-reproducible results.csv)");

  std::string spec, synth_out;
  auto* synth = app.add_subcommand("synth", "write a synthetic Gaussian-mixture feature file");
  synth->add_option("--spec", spec, "synth spec (JSON)")->required();
  synth->add_option("--out", synth_out, "output feature file")->required();

  std::string a, b;
  auto* compare = app.add_subcommand("compare", "paired t-test on final-round accuracy (a - b)");
  compare->add_option("--a", a, "results.csv")->required();
  compare->add_option("--b", b, "results.csv")->required();

  std::vector<std::string> inputs;
  std::string cat_out;
  auto* csvcat = app.add_subcommand("csvcat", "merge results.csv files with a source column");
  csvcat->add_option("inputs", inputs, "results.csv files")->required();
  csvcat->add_option("--out", cat_out, "merged file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return kConfig;
  }

  try {
    if (*run) return cmd_run(config, features, out_dir, no_timing);
    if (*synth) return cmd_synth(spec, synth_out);
    if (*compare) return cmd_compare(a, b);
    if (*csvcat) return cmd_csvcat(inputs, cat_out);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const FormatError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::logic_error& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kConfig;
  }
  return kConfig;
}
