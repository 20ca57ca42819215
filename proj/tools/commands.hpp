#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "socrec/attention.hpp"
#include "socrec/data.hpp"
#include "socrec/metrics.hpp"
#include "socrec/training.hpp"

namespace socrec::cli {

// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kDataError = 3,
  kNumericError = 4,
};

// Everything a subcommand can be configured with. Precedence is command-line
// flag, then config file, then the defaults below.
struct RunConfig {
  std::uint64_t seed = 7;
  std::filesystem::path out = "out";
  int threads = 0;

  SynthConfig synth;

  std::filesystem::path data;      // default: <out>/interactions.csv
  std::filesystem::path features;  // optional item-feature CSV
  std::filesystem::path model;     // default: <out>/model.socm
  FilterPolicy filter_policy = FilterPolicy::kAnd;
  double split_ratio = 0.8;

  std::size_t d = 16;
  std::size_t hidden = 0;  // 0 = 2d
  SocVariant variant = SocVariant::kFull;
  bool no_soc = false;
  bool scale_logits = false;
  bool literal_self = false;

  TrainConfig train;
  EvalOptions eval;

  // ablate
  std::size_t seeds = 1;

  // gradcheck
  std::size_t gc_d = 4;
  std::size_t gc_m = 3;
  std::size_t gc_n = 2;
  std::size_t gc_hidden = 8;
  std::size_t gc_trials = 20;
  double gc_eps = 1e-5;
  double gc_tolerance = 1e-6;
  bool inject_fault = false;

  std::filesystem::path data_path() const { return data.empty() ? out / "interactions.csv" : data; }
  std::filesystem::path model_path() const { return model.empty() ? out / "model.socm" : model; }
};

int cmd_synth(const RunConfig& cfg, std::ostream& log);
int cmd_train(const RunConfig& cfg, std::ostream& log);
int cmd_eval(const RunConfig& cfg, std::ostream& log);
int cmd_ablate(const RunConfig& cfg, std::ostream& log);
int cmd_gradcheck(const RunConfig& cfg, std::ostream& log);

// Parses argv, dispatches, maps exceptions to exit codes.
int run(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

}  // namespace socrec::cli
