#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rumfit/eval.hpp"
#include "rumfit/fitting.hpp"
#include "rumfit/ingest.hpp"
#include "rumfit/lp.hpp"
#include "rumfit/mnl.hpp"
#include "rumfit/random.hpp"
#include "rumfit/wfhs.hpp"

namespace rumfit::cli {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Solver-side failure that should surface as exit code 3.
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Options {
  std::string data;
  std::string format = "canonical";
  std::optional<std::size_t> k;
  std::string oracle = "local";
  std::uint64_t seed = 0;
  std::string out = ".";
  unsigned threads = 1;
  std::optional<std::size_t> max_iters;
  int t = 100;
  int t_prime = 5;
  std::string config;

  // fit
  std::string weights = "shifted";
  std::size_t stall_window = 20;
  double stall_eps = 1e-5;
  bool no_lower_bound = false;
  std::size_t exact_limit = kDefaultExactLimit;
  std::string name;
  bool dump_lp = false;

  // lower-bound / eval
  std::string rum;
  std::string mnl;
  std::string model = "rum";

  // crossval
  std::vector<std::string> models{"rum", "mnl", "tensor"};
  std::size_t folds = 5;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

  // mnl
  int mnl_iters = 5000;
  double mnl_step = 1.0;
  double ridge = 0.0;

  // wfhs-solve
  std::string instance;
  std::string method = "exact";
  std::optional<double> threshold;
};

void add_data_options(CLI::App* sub, Options& o) {
  sub->add_option("--data", o.data, "Dataset file")->required();
  sub->add_option("--format", o.format, "canonical | rankings | ballots | slates")
      ->capture_default_str();
  sub->add_option("--k", o.k, "Slate size (required for raw formats)");
}

void add_common_options(CLI::App* sub, Options& o) {
  sub->add_option("--out", o.out, "Output directory")->capture_default_str();
  sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  sub->add_option("--threads", o.threads, "Worker threads")->capture_default_str();
  sub->add_option("--config", o.config, "key=value configuration file (flags win)");
}

void add_fit_options(CLI::App* sub, Options& o) {
  sub->add_option("--oracle", o.oracle, "exact | local")->capture_default_str();
  sub->add_option("--max-iters", o.max_iters, "Iteration cap (fit 1500, crossval 250)");
  sub->add_option("--t", o.t, "Local search restarts")->capture_default_str();
  sub->add_option("--t-prime", o.t_prime, "Minimum restarts before returning")
      ->capture_default_str();
  sub->add_option("--weights", o.weights, "Separation weights: shifted | signed")
      ->capture_default_str();
  sub->add_option("--stall-window", o.stall_window, "Stall window in iterations (0 = off)")
      ->capture_default_str();
  sub->add_option("--stall-eps", o.stall_eps, "Minimum improvement over the stall window")
      ->capture_default_str();
  sub->add_option("--exact-limit", o.exact_limit, "Largest n for the exact DP")
      ->capture_default_str();
}

void add_mnl_options(CLI::App* sub, Options& o) {
  sub->add_option("--mnl-iters", o.mnl_iters, "MNL gradient iterations")->capture_default_str();
  sub->add_option("--mnl-step", o.mnl_step, "MNL initial step")->capture_default_str();
  sub->add_option("--ridge", o.ridge, "MNL L2 penalty (0 = plain likelihood)")
      ->capture_default_str();
}

FitConfig fit_config(const Options& o, std::size_t default_iters) {
  FitConfig cfg;
  cfg.oracle = parse_oracle_kind(o.oracle);
  cfg.t = o.t;
  cfg.t_prime = o.t_prime;
  cfg.max_iterations = o.max_iters.value_or(default_iters);
  cfg.stall_window = o.stall_window;
  cfg.stall_epsilon = o.stall_eps;
  cfg.seed = o.seed;
  cfg.threads = std::max(1u, o.threads);
  cfg.weight_mode = parse_weight_mode(o.weights);
  cfg.compute_lower_bound = !o.no_lower_bound;
  cfg.exact_limit = o.exact_limit;
  cfg.validate();
  return cfg;
}

MnlFitOptions mnl_options(const Options& o) {
  MnlFitOptions m;
  m.max_iterations = o.mnl_iters;
  m.step = o.mnl_step;
  m.ridge = o.ridge;
  return m;
}

ChoiceDataset load(const Options& o) {
  return load_dataset_file(o.data, parse_dataset_format(o.format), o.k);
}

fs::path out_dir(const Options& o) {
  fs::path dir(o.out);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw InputError("cannot write " + p.string());
  return f;
}

Rum load_rum(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_rum(in);
}

std::string dataset_name(const Options& o) {
  return o.name.empty() ? fs::path(o.data).stem().string() : o.name;
}

int cmd_ingest(const Options& o, std::ostream& out, std::ostream& err) {
  const auto ds = load(o);
  const auto dir = out_dir(o);
  {
    auto f = open_out(dir / "dataset.txt");
    write_canonical_dataset(f, ds);
  }
  if (ds.observations.empty()) {
    err << "warning: no observations of size k=" << ds.k << " (" << ds.skipped_records
        << " records skipped)\n";
  }
  out << "n=" << ds.n << " k=" << ds.k << " slates=" << ds.slate_count()
      << " observations=" << ds.total_count() << " skipped=" << ds.skipped_records << '\n';
  return kExitOk;
}

int cmd_fit(const Options& o, std::ostream& out, std::ostream&) {
  const auto ds = load(o);
  const auto table = empirical_distributions(ds);
  const auto cfg = fit_config(o, 1500);
  FitReport report;
  try {
    report = fit_rum(table, cfg);
  } catch (const FitError& e) {
    const auto dir = out_dir(o);
    auto f = open_out(dir / "trace.csv");
    write_fit_trace_csv(f, e.trace());
    throw SolverFailure(e.what());
  }
  const auto dir = out_dir(o);
  {
    auto f = open_out(dir / "rum.txt");
    write_rum(f, report.rum);
  }
  {
    auto f = open_out(dir / "trace.csv");
    write_fit_trace_csv(f, report.trace);
  }
  {
    auto f = open_out(dir / "fit_report.json");
    write_fit_report_json(f, report, table, cfg, {"rum.txt", dataset_name(o), ds.labels});
  }
  {
    auto f = open_out(dir / "fit_report.csv");
    std::optional<double> lb;
    if (report.lower_bound) lb = report.lower_bound->value;
    write_fit_report_csv(f, {{dataset_name(o), table.slate_size(), report.rum.support().size(),
                              report.average_error, lb}});
  }
  {
    auto f = open_out(dir / "error_cdf.csv");
    write_error_cdf_csv(f, error_cdf(report.rum, table));
  }
  if (o.dump_lp) {
    std::vector<Permutation> support;
    for (const auto& c : report.rum.support()) support.push_back(c.permutation);
    RestrictedLp lp(table, std::move(support));
    auto f = open_out(dir / "final_lp.mps");
    write_mps(f, lp.model());
  }
  out << "average_error=" << format_double(report.average_error)
      << " support=" << report.rum.support().size() << " iterations=" << report.trace.size()
      << " stop=" << to_string(report.stop_reason);
  if (report.lower_bound) out << " lower_bound=" << format_double(report.lower_bound->value);
  out << '\n';
  return kExitOk;
}

int cmd_lower_bound(const Options& o, std::ostream& out, std::ostream&) {
  const auto ds = load(o);
  const auto table = empirical_distributions(ds);
  const auto rum = load_rum(o.rum);
  if (rum.universe_size() != table.universe_size()) {
    throw InputError("RUM universe " + std::to_string(rum.universe_size()) +
                     " does not match dataset n=" + std::to_string(table.universe_size()));
  }
  std::vector<Permutation> support;
  for (const auto& c : rum.support()) support.push_back(c.permutation);
  const auto sb = lower_bound_for_support(table, std::move(support), o.exact_limit);
  ordered_json j;
  j["average_error"] = average_l1_error(rum, table);
  j["lp_objective"] = sb.objective;
  j["lower_bound"] = sb.bound.value;
  j["tight"] = sb.bound.tight;
  const auto text = j.dump(2);
  out << text << '\n';
  auto f = open_out(out_dir(o) / "lower_bound.json");
  f << text << '\n';
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream&) {
  const auto ds = load(o);
  const auto table = empirical_distributions(ds);
  const auto dir = out_dir(o);
  const auto model = parse_predict_model(o.model);
  std::vector<double> errors;
  ordered_json j;
  j["model"] = to_string(model);
  std::size_t support = 0;
  if (model == PredictModel::rum) {
    if (o.rum.empty()) throw InputError("eval --model rum needs --rum <file>");
    const auto rum = load_rum(o.rum);
    if (rum.universe_size() != table.universe_size()) {
      throw InputError("RUM universe does not match the dataset");
    }
    errors = slate_errors(rum, table);
    support = rum.support().size();
  } else if (model == PredictModel::mnl) {
    MnlModel m;
    if (!o.mnl.empty()) {
      std::ifstream in(o.mnl);
      if (!in) throw InputError("cannot open " + o.mnl);
      m = read_mnl(in);
    } else {
      m = mnl_fit(ds, mnl_options(o));
      auto f = open_out(dir / "mnl.txt");
      write_mnl(f, m);
    }
    if (m.utilities.size() != table.universe_size()) {
      throw InputError("MNL universe does not match the dataset");
    }
    for (const auto& e : table.entries()) {
      errors.push_back(l1_distance(mnl_predict(m, e.slate), e.probabilities));
    }
    support = m.utilities.size();
  } else {
    throw InputError("eval supports --model rum or mnl");
  }
  const auto cdf = error_cdf_from_errors(errors);
  double avg = 0.0;
  for (double e : errors) avg += e;
  avg /= static_cast<double>(errors.size());
  j["average_error"] = avg;
  j["slate_count"] = table.size();
  {
    auto f = open_out(dir / "error_cdf.csv");
    write_error_cdf_csv(f, cdf);
  }
  {
    auto f = open_out(dir / "fit_report.csv");
    write_fit_report_csv(f, {{dataset_name(o), table.slate_size(), support, avg, std::nullopt}});
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_crossval(const Options& o, std::ostream& out, std::ostream&) {
  const auto ds = load(o);
  CvConfig cv;
  cv.folds = o.folds;
  cv.seeds = o.seeds;
  cv.fit = fit_config(o, 250);
  cv.max_iterations = cv.fit.max_iterations;
  cv.mnl = mnl_options(o);
  cv.threads = std::max(1u, o.threads);
  std::vector<CvSummary> summaries;
  ordered_json j = ordered_json::array();
  for (const auto& name : o.models) {
    const auto model = parse_predict_model(name);
    summaries.push_back(cross_validate(ds, cv, model));
    ordered_json s;
    s["model"] = to_string(model);
    s["mean_rmse"] = summaries.back().mean;
    s["stddev"] = summaries.back().stddev;
    s["cells"] = summaries.back().cells.size();
    j.push_back(s);
  }
  auto f = open_out(out_dir(o) / "cv_report.csv");
  write_cv_report_csv(f, summaries);
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_wfhs_solve(const Options& o, std::ostream& out, std::ostream&) {
  std::ifstream in(o.instance);
  if (!in) throw InputError("cannot open " + o.instance);
  const auto inst = read_wfhs_instance(in);
  ordered_json j;
  std::optional<WfhsResult> res;
  if (o.method == "exact") {
    res = wfhs_exact(inst, o.exact_limit);
  } else if (o.method == "brute") {
    res = wfhs_brute_force(inst);
  } else if (o.method == "local") {
    LocalSearchOptions opt;
    opt.threshold = o.threshold.value_or(std::numeric_limits<double>::infinity());
    opt.restarts = o.t;
    opt.min_restarts = o.t_prime;
    opt.seed = derive_seed(o.seed, "wfhs-solve");
    opt.threads = std::max(1u, o.threads);
    auto outcome = wfhs_local_search_run(inst, opt);
    res = outcome.result;
    if (!res) {
      j["found"] = false;
      j["best_cost"] = outcome.best_cost;
      j["restarts_used"] = outcome.restarts_used;
    }
  } else {
    throw InputError("unknown method '" + o.method + "' (expected exact, local or brute)");
  }
  if (res) {
    j["cost"] = res->cost;
    j["permutation"] = std::vector<ItemId>(res->permutation.order().begin(),
                                           res->permutation.order().end());
    j["method"] = to_string(res->method);
    j["restarts_used"] = res->restarts_used;
  }
  out << j.dump() << '\n';
  return kExitOk;
}

bool truthy(const std::string& v) {
  std::string s = v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s == "1" || s == "true" || s == "yes" || s == "on";
}

// Appends config-file settings for options not given on the command line.
void merge_config(std::vector<std::string>& args, CLI::App& app, std::ostream& err) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.empty()) return;
  CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args.front());
  } catch (const CLI::OptionNotFound&) {
    return;
  }
  auto given = [&](const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  for (const auto& [key, value] : read_config_file(path)) {
    const std::string flag = "--" + key;
    auto* opt = sub->get_option_no_throw(flag);
    if (opt == nullptr) {
      err << "warning: config key '" << key << "' is not an option of '" << args.front()
          << "'\n";
      continue;
    }
    if (given(flag)) continue;
    if (opt->get_type_size() == 0) {
      if (truthy(value)) args.push_back(flag);
    } else {
      args.push_back(flag);
      args.push_back(value);
    }
  }
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || trim(line.substr(0, eq)).empty()) {
      throw InputError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Fit random utility models to winner distributions on k-slates", "rumfit"};
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand("ingest", "Parse a dataset and write the canonical file");
  add_data_options(ingest, o);
  add_common_options(ingest, o);

  auto* fit = app.add_subcommand("fit", "Fit a RUM by column generation");
  add_data_options(fit, o);
  add_common_options(fit, o);
  add_fit_options(fit, o);
  fit->add_flag("--no-lower-bound", o.no_lower_bound, "Skip the exact lower-bound certificate");
  fit->add_flag("--dump-lp", o.dump_lp, "Write the final restricted LP as MPS");
  fit->add_option("--name", o.name, "Dataset name used in reports");

  auto* lb = app.add_subcommand("lower-bound", "Certify a RUM with the exact oracle");
  add_data_options(lb, o);
  add_common_options(lb, o);
  lb->add_option("--rum", o.rum, "RUM file")->required();
  lb->add_option("--exact-limit", o.exact_limit, "Largest n for the exact DP")
      ->capture_default_str();

  auto* ev = app.add_subcommand("eval", "Per-slate error report for a model");
  add_data_options(ev, o);
  add_common_options(ev, o);
  add_mnl_options(ev, o);
  ev->add_option("--model", o.model, "rum | mnl")->capture_default_str();
  ev->add_option("--rum", o.rum, "RUM file (model rum)");
  ev->add_option("--mnl", o.mnl, "MNL model file (model mnl; fitted when absent)");
  ev->add_option("--name", o.name, "Dataset name used in reports");

  auto* cv = app.add_subcommand("crossval", "Cross-validated prediction RMSE");
  add_data_options(cv, o);
  add_common_options(cv, o);
  add_fit_options(cv, o);
  add_mnl_options(cv, o);
  cv->add_option("--models", o.models, "Models: rum, mnl, tensor")->delimiter(',');
  cv->add_option("--folds", o.folds, "Folds")->capture_default_str();
  cv->add_option("--seeds", o.seeds, "Split seeds")->delimiter(',');

  auto* ws = app.add_subcommand("wfhs-solve", "Solve a WFHS instance file");
  ws->add_option("--instance", o.instance, "Instance file")->required();
  ws->add_option("--method", o.method, "exact | local | brute")->capture_default_str();
  ws->add_option("--threshold", o.threshold, "Local search threshold (default +inf)");
  ws->add_option("--t", o.t, "Local search restarts")->capture_default_str();
  ws->add_option("--t-prime", o.t_prime, "Minimum restarts")->capture_default_str();
  ws->add_option("--exact-limit", o.exact_limit, "Largest n for the exact DP")
      ->capture_default_str();
  add_common_options(ws, o);

  try {
    merge_config(args, app, err);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    std::ostringstream msg;
    const int code = app.exit(e, out, msg);
    err << msg.str();
    return code == 0 ? kExitOk : kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    if (*ingest) return cmd_ingest(o, out, err);
    if (*fit) return cmd_fit(o, out, err);
    if (*lb) return cmd_lower_bound(o, out, err);
    if (*ev) return cmd_eval(o, out, err);
    if (*cv) return cmd_crossval(o, out, err);
    if (*ws) return cmd_wfhs_solve(o, out, err);
  } catch (const SolverFailure& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const CapacityError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitInput;
}

}  // namespace rumfit::cli
