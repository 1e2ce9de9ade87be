#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace impostor::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_usage = 2,
  exit_io = 3,
  exit_format = 4,
  exit_shape = 5,
};

/// Missing or malformed flag values detected after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flag values after merging the command line with the --config file.
struct Options {
  std::string data;
  std::string model;
  std::string out;
  std::string config;
  std::string val;
  std::string unseen;
  std::string summary;
  std::uint64_t seed = 7;
  std::string scheme = "loose";
  double sigma = 0.1;
  double lambda = 1.0;
  double lr = 0.01;
  std::optional<double> impostor_lr;
  double weight_decay = 5e-4;
  std::size_t epochs = 60;
  std::size_t batch_size = 64;
  std::size_t embed_dim = 512;
  std::string hidden = "64";
  std::size_t refresh_period = 10;
  std::size_t pq_m = 8;
  std::size_t pq_k = 0;
  std::string sigma_grid;
  std::size_t repetitions = 5;
  std::size_t threads = 1;
  bool allow_overlap = false;

  // bench without --model / --data
  std::size_t input_dim = 1024;
  std::size_t impostors = 10000;
  std::size_t bench_classes = 10;
  std::size_t queries = 64;

  // generate
  std::string generator = "rings";
  std::size_t classes = 2;
  std::size_t per_class = 1000;
  double noise = 0.1;
  std::string fractions = "0.5,0.25,0.25";
  std::string radii;
  std::uint32_t first_label = 0;

  // set from which flags were supplied (command line or config file)
  bool pq_requested = false;
  bool sigma_given = false;
};

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_train(const Options& opts, std::ostream& out);
int cmd_sweep(const Options& opts, std::ostream& out);
int cmd_eval(const Options& opts, std::ostream& out);
int cmd_compress(const Options& opts, std::ostream& out);
int cmd_bench(const Options& opts, std::ostream& out);
int cmd_openset(const Options& opts, std::ostream& out);
int cmd_report(const Options& opts, std::ostream& out);
int cmd_generate(const Options& opts, std::ostream& out);

}  // namespace impostor::cli
