#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "impostor/dataset.hpp"
#include "impostor/error.hpp"

namespace impostor::cli {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Flat key=value file; blank lines and lines starting with '#' are skipped.
// Keys are flag names with or without the leading dashes.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(DataErrorCode::io, "cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = trim(t.substr(0, eq));
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    entries.emplace_back(key, trim(t.substr(eq + 1)));
  }
  return entries;
}

// Config values only fill options the command line left unset.
void merge_config(CLI::App& sub, const std::string& path) {
  for (const auto& [key, value] : read_config_file(path)) {
    if (key == "config") throw UsageError("config files cannot include other config files");
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr) throw UsageError("unknown key in " + path + ": " + key);
    if (opt->count() == 0) {
      opt->add_result(value);
      opt->run_callback();
    }
  }
}

void print_resolved(const CLI::App& sub, std::ostream& out) {
  out << "# impostor " << sub.get_name() << '\n';
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt == sub.get_help_ptr()) continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else if (opt->get_type_size() == 0) {
      value = "false";
    } else {
      value = opt->get_default_str();
    }
    out << "# " << opt->get_single_name() << '=' << value << '\n';
  }
}

void add_shared(CLI::App& sub, Options& o) {
  sub.add_option("--data", o.data, "Dataset file (IMPD)");
  sub.add_option("--model", o.model, "Model file (IMPM)");
  sub.add_option("--out", o.out, "Output path");
  sub.add_option("--seed", o.seed, "Random seed");
  sub.add_option("--config", o.config, "key=value file; flags win over file values");
  sub.add_option("--scheme", o.scheme, "Training scheme")
      ->check(CLI::IsMember({"tied", "fixed", "loose", "softmax"}));
  sub.add_option("--sigma", o.sigma, "RBF kernel width")->check(CLI::PositiveNumber);
  sub.add_option("--lambda", o.lambda, "Attachment weight for the loose scheme")->check(CLI::NonNegativeNumber);
  sub.add_option("--epochs", o.epochs, "Training epochs");
  sub.add_option("--batch-size", o.batch_size, "Minibatch size")->check(CLI::PositiveNumber);
  sub.add_option("--embed-dim", o.embed_dim, "Embedding dimensionality")->check(CLI::PositiveNumber);
  sub.add_option("--lr", o.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  sub.add_option("--weight-decay", o.weight_decay, "L2 weight decay on backbone parameters")
      ->check(CLI::NonNegativeNumber);
  sub.add_option("--refresh-period", o.refresh_period, "Tied scheme: epochs between impostor refreshes")
      ->check(CLI::PositiveNumber);
  sub.add_option("--pq-m", o.pq_m, "PQ subspaces")->check(CLI::PositiveNumber);
  sub.add_option("--pq-k", o.pq_k, "PQ centroids per subspace (0: min(256, M))");
}

void add_training_extras(CLI::App& sub, Options& o) {
  sub.add_option("--val", o.val, "Validation dataset file");
  sub.add_option("--hidden", o.hidden, "Hidden layer widths, comma separated (empty: linear)");
  sub.add_option("--impostor-lr", o.impostor_lr, "Learning rate for loose impostors (default: --lr)")
      ->check(CLI::PositiveNumber);
}

int report_exception(std::ostream& err) {
  try {
    throw;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return exit_usage;
  } catch (const DataError& e) {
    err << (e.code() == DataErrorCode::io ? "io error: " : "format error: ") << e.what() << '\n';
    return e.code() == DataErrorCode::io ? exit_io : exit_format;
  } catch (const ContractError& e) {
    err << "shape error: " << e.what() << '\n';
    return exit_shape;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_failure;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Impostor networks: RBF classifiers over learned embeddings", "impostor"};
  app.require_subcommand(1, 1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  Options o;

  using Command = std::function<int(const Options&, std::ostream&)>;
  std::map<CLI::App*, Command> commands;

  auto* train = app.add_subcommand("train", "Initialize, normalize and train a model");
  add_shared(*train, o);
  add_training_extras(*train, o);
  commands[train] = cmd_train;

  auto* sweep = app.add_subcommand("sweep", "Select sigma by validation accuracy");
  add_shared(*sweep, o);
  add_training_extras(*sweep, o);
  sweep->add_option("--sigma-grid", o.sigma_grid, "Comma separated sigma values");
  commands[sweep] = cmd_sweep;

  auto* eval = app.add_subcommand("eval", "Per-class and overall accuracy");
  add_shared(*eval, o);
  commands[eval] = cmd_eval;

  auto* compress = app.add_subcommand("compress", "PQ-compress the impostors, optionally retraining (fixed)");
  add_shared(*compress, o);
  add_training_extras(*compress, o);
  compress->add_option("--summary", o.summary, "Summary CSV path (default: stdout)");
  commands[compress] = cmd_compress;

  auto* bench = app.add_subcommand("bench", "Time backbone and RBF stages separately");
  add_shared(*bench, o);
  bench->add_option("--hidden", o.hidden, "Hidden widths of a random backbone when --model is absent");
  bench->add_option("--repetitions", o.repetitions, "Timed repetitions (>= 5)");
  bench->add_option("--threads", o.threads, "Also report the parallel distance path with this many threads")
      ->check(CLI::PositiveNumber);
  bench->add_option("--input-dim", o.input_dim, "Input width of a random backbone")->check(CLI::PositiveNumber);
  bench->add_option("--impostors", o.impostors, "Impostor count of a random model")->check(CLI::PositiveNumber);
  bench->add_option("--classes", o.bench_classes, "Class count of a random model")->check(CLI::PositiveNumber);
  bench->add_option("--queries", o.queries, "Random query count when --data is absent")->check(CLI::PositiveNumber);
  commands[bench] = cmd_bench;

  auto* openset = app.add_subcommand("openset", "Entropy histograms and KS distance, seen vs unseen");
  add_shared(*openset, o);
  openset->add_option("--unseen", o.unseen, "Dataset of classes absent from training");
  openset->add_option("--summary", o.summary, "Summary CSV path (default: stdout)");
  openset->add_flag("--allow-overlap", o.allow_overlap, "Skip the disjoint-label check");
  commands[openset] = cmd_openset;

  auto* report = app.add_subcommand("report", "Embedding-to-impostor distances per class");
  add_shared(*report, o);
  commands[report] = cmd_report;

  auto* generate = app.add_subcommand("generate", "Write synthetic train/val/test datasets");
  generate->add_option("--out", o.out, "Output prefix");
  generate->add_option("--seed", o.seed, "Random seed");
  generate->add_option("--config", o.config, "key=value file; flags win over file values");
  generate->add_option("--generator", o.generator, "Generator")->check(CLI::IsMember({"rings", "blobs", "moons"}));
  generate->add_option("--classes", o.classes, "Class count")->check(CLI::PositiveNumber);
  generate->add_option("--per-class", o.per_class, "Samples per class")->check(CLI::PositiveNumber);
  generate->add_option("--noise", o.noise, "Gaussian noise std")->check(CLI::NonNegativeNumber);
  generate->add_option("--fractions", o.fractions, "train,val,test fractions");
  generate->add_option("--radii", o.radii, "Ring radii, comma separated (default: k+1)");
  generate->add_option("--first-label", o.first_label, "Label of the first class");
  commands[generate] = cmd_generate;

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
    CLI::App* sub = app.get_subcommands().front();
    if (!o.config.empty()) merge_config(*sub, o.config);
    auto supplied = [&](const char* name) {
      const CLI::Option* opt = sub->get_option_no_throw(name);
      return opt != nullptr && opt->count() > 0;
    };
    o.pq_requested = supplied("--pq-m") || supplied("--pq-k");
    o.sigma_given = supplied("--sigma");
    print_resolved(*sub, out);
    return commands.at(sub)(o, out);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return exit_usage;
  } catch (...) {
    return report_exception(err);
  }
}

}  // namespace impostor::cli
