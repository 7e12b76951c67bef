// Acceptance suite: one PASS / FAIL / SKIPPED line per criterion.
//
// Optional data (criteria 5-7):
//   RUMFIT_SFWORK   winner records of the SFwork data   (RUMFIT_SFWORK_FORMAT, default slates)
//   RUMFIT_SUSHI    full rankings of the Sushi data     (RUMFIT_SUSHI_FORMAT, default rankings)

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <sys/wait.h>

#include "rumfit/eval.hpp"
#include "rumfit/fitting.hpp"
#include "rumfit/mnl.hpp"
#include "test_util.hpp"

using namespace rumfit;
namespace fs = std::filesystem;

namespace {

enum class Verdict { pass, fail, skipped };

struct Outcome {
  Verdict verdict = Verdict::pass;
  std::string detail;
};

// Collects the first few failure messages of a criterion.
class Failures {
 public:
  void add(const std::string& msg) {
    if (count_++ < 5) msgs_ += (msgs_.empty() ? "" : "; ") + msg;
  }
  bool any() const { return count_ > 0; }
  std::string text() const {
    return msgs_ + (count_ > 5 ? " (+" + std::to_string(count_ - 5) + " more)" : "");
  }

 private:
  std::size_t count_ = 0;
  std::string msgs_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << std::fixed << v;
  return ss.str();
}

std::size_t binom(std::size_t n, std::size_t k) {
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// 100 instances per (n, k), edge counts spread over [1, C(n, k)].
std::vector<WfhsInstance> oracle_instances() {
  std::vector<WfhsInstance> out;
  for (std::size_t n = 5; n <= 8; ++n) {
    for (std::size_t k = 2; k <= 3; ++k) {
      Rng rng(derive_seed(derive_seed(n * 10 + k, "acceptance-wfhs"), 0));
      for (int i = 0; i < 100; ++i) {
        const std::size_t edges = 1 + uniform_below(rng, binom(n, k));
        out.push_back(testutil::random_wfhs(n, k, edges, rng));
      }
    }
  }
  return out;
}

std::string label(const WfhsInstance& inst, std::size_t i) {
  return "n=" + std::to_string(inst.vertex_count()) + " k=" + std::to_string(inst.edge_size()) +
         " #" + std::to_string(i);
}

Outcome criterion_oracle_equivalence(const std::vector<WfhsInstance>& insts) {
  const auto t0 = std::chrono::steady_clock::now();
  Failures f;
  for (std::size_t i = 0; i < insts.size(); ++i) {
    double dp = 0;
    const auto ex = wfhs_exact(insts[i], kDefaultExactLimit, &dp);
    const auto bf = wfhs_brute_force(insts[i]);
    if (ex.cost != bf.cost) {
      f.add(label(insts[i], i) + ": exact " + format_double(ex.cost) + " vs brute " +
            format_double(bf.cost));
    }
    if (std::abs(wfhs_cost(insts[i], ex.permutation) - dp) > 1e-9) {
      f.add(label(insts[i], i) + ": reconstruction differs from DP value");
    }
  }
  const double secs = seconds_since(t0);
  if (secs >= 60.0) f.add("runtime " + fmt(secs) + " s");
  return {f.any() ? Verdict::fail : Verdict::pass,
          f.any() ? f.text()
                  : std::to_string(insts.size()) + " instances, " + fmt(secs) + " s"};
}

Outcome criterion_local_search(const std::vector<WfhsInstance>& insts) {
  const auto t0 = std::chrono::steady_clock::now();
  Failures f;
  for (std::size_t i = 0; i < insts.size(); ++i) {
    LocalSearchOptions opt;
    opt.threshold = std::numeric_limits<double>::infinity();
    opt.restarts = 100;
    opt.min_restarts = 5;
    opt.seed = derive_seed(i, "acceptance-ls");
    opt.record_traces = true;
    const auto out = wfhs_local_search_run(insts[i], opt);
    if (!out.result) {
      f.add(label(insts[i], i) + ": nothing returned");
      continue;
    }
    if (out.result->cost < wfhs_exact(insts[i]).cost) f.add(label(insts[i], i) + ": below optimum");
    if (!testutil::is_insertion_local_optimum(insts[i], out.result->permutation, 1e-12)) {
      f.add(label(insts[i], i) + ": not a local optimum");
    }
    for (const auto& tr : out.traces) {
      for (std::size_t j = 1; j < tr.size(); ++j) {
        if (!(tr[j] < tr[j - 1])) f.add(label(insts[i], i) + ": trace not strictly decreasing");
      }
    }
  }
  const double secs = seconds_since(t0);
  if (secs >= 120.0) f.add("runtime " + fmt(secs) + " s");
  return {f.any() ? Verdict::fail : Verdict::pass,
          f.any() ? f.text()
                  : std::to_string(insts.size()) + " instances, " + fmt(secs) + " s"};
}

Outcome criterion_lp_duality() {
  Failures f;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(seed, "acceptance-lp"));
    const std::size_t n = 3 + uniform_below(rng, 6);
    const std::size_t k = 2 + uniform_below(rng, 2);
    const auto t = testutil::random_table(n, k, 1 + uniform_below(rng, binom(n, k)), rng);
    const auto rum = testutil::random_rum(n, 1 + uniform_below(rng, 10), rng);
    std::vector<Permutation> sup;
    for (const auto& c : rum.support()) sup.push_back(c.permutation);
    const RestrictedLp lp(t, sup);
    const auto sol = solve_lp(lp);
    const std::string tag = "table " + std::to_string(seed);
    if (sol.status != LpStatus::optimal) {
      f.add(tag + ": " + to_string(sol.status));
      continue;
    }
    const auto d = extract_dual(sol, lp);
    if (std::abs(sol.objective - d.value) > 1e-7) {
      f.add(tag + ": primal " + format_double(sol.objective) + " dual " + format_double(d.value));
    }
    const double box = 1.0 / static_cast<double>(t.size());
    for (double x : d.delta) {
      if (std::abs(x) > box + 1e-9) f.add(tag + ": delta outside box");
    }
    for (const auto& pi : sup) {
      if (dual_constraint_value(d, t, pi) < d.D - 1e-7) f.add(tag + ": dual infeasible on support");
    }
  }
  return {f.any() ? Verdict::fail : Verdict::pass, f.any() ? f.text() : "100 tables"};
}

FitConfig exact_fit_config() {
  FitConfig cfg;
  cfg.oracle = OracleKind::exact;
  cfg.stall_window = 0;
  return cfg;
}

Outcome criterion_exact_recovery() {
  Failures f;
  std::string detail;
  Rng rng(derive_seed(8, "acceptance-recovery"));
  const auto truth = testutil::random_rum(8, 5, rng);
  for (std::size_t k = 2; k <= 4; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto t = testutil::table_from_rum(truth, k);
    const auto r = fit_rum(t, exact_fit_config());
    const double secs = seconds_since(t0);
    const std::string tag = "k=" + std::to_string(k);
    if (!r.converged) f.add(tag + ": not converged (" + to_string(r.stop_reason) + ")");
    if (r.average_error > 1e-6) f.add(tag + ": error " + format_double(r.average_error));
    if (secs >= 300.0) f.add(tag + ": runtime " + fmt(secs) + " s");
    detail += (detail.empty() ? "" : ", ") + tag + " error " + format_double(r.average_error) +
              " in " + fmt(secs) + " s";
  }
  return {f.any() ? Verdict::fail : Verdict::pass, f.any() ? f.text() : detail};
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

ChoiceDataset load_env_dataset(const std::string& path, const char* format_var,
                               const char* default_format, std::size_t k) {
  const auto format = env(format_var).value_or(default_format);
  return load_dataset_file(path, parse_dataset_format(format), k);
}

Outcome criterion_tight_lower_bound() {
  Failures f;
  double worst_gap = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(seed, "acceptance-gap"));
    const std::size_t n = 5 + seed % 6;
    const std::size_t k = 2 + seed % 2;
    const auto base = testutil::table_from_rum(testutil::random_rum(n, 3 + seed % 4, rng), k);
    const auto t = testutil::perturb_table(base, 0.4, rng);
    const std::string tag = "n=" + std::to_string(n) + " k=" + std::to_string(k);
    const auto r = fit_rum(t, exact_fit_config());
    if (!r.converged || !r.lower_bound) {
      f.add(tag + ": exact fit not converged");
      continue;
    }
    const double gap = r.average_error - r.lower_bound->value;
    worst_gap = std::max(worst_gap, gap);
    if (gap > 1e-6) f.add(tag + ": gap " + format_double(gap));

    // Truncated and heuristic runs must still respect the bound.
    FitConfig cfg;
    cfg.seed = seed;
    cfg.t = 20;
    cfg.max_iterations = 3 + seed % 5;
    const auto partial = fit_rum(t, cfg);
    if (partial.lower_bound && partial.lower_bound->value > partial.average_error + 1e-9) {
      f.add(tag + ": lower bound above error on a truncated run");
    }
  }
  std::string detail = "20 perturbed tables, worst gap " + format_double(worst_gap);

  if (const auto path = env("RUMFIT_SFWORK")) {
    const auto ds = load_env_dataset(*path, "RUMFIT_SFWORK_FORMAT", "slates", 3);
    const auto t = empirical_distributions(ds);
    FitConfig cfg;
    const auto r = fit_rum(t, cfg);
    const double lb = r.lower_bound ? r.lower_bound->value : std::nan("");
    if (std::abs(r.average_error - 0.0044) > 0.0005) {
      f.add("SFwork error " + format_double(r.average_error));
    }
    if (!(std::abs(lb - 0.0044) <= 0.0005)) f.add("SFwork lower bound " + format_double(lb));
    detail += "; SFwork k=3 error " + fmt(r.average_error, 4) + " bound " + fmt(lb, 4);
  }
  return {f.any() ? Verdict::fail : Verdict::pass, f.any() ? f.text() : detail};
}

Outcome criterion_sushi_numbers() {
  const auto path = env("RUMFIT_SUSHI");
  if (!path) return {Verdict::skipped, "set RUMFIT_SUSHI to a rankings file"};
  Failures f;
  std::string detail;
  const double expected[] = {0.0, 0.0, 0.0, 0.0002};
  for (std::size_t k = 2; k <= 5; ++k) {
    const auto t = empirical_distributions(load_env_dataset(*path, "RUMFIT_SUSHI_FORMAT",
                                                            "rankings", k));
    const auto r = fit_rum(t, FitConfig{});
    if (std::abs(r.average_error - expected[k - 2]) > 0.0005) {
      f.add("k=" + std::to_string(k) + " error " + format_double(r.average_error));
    }
    detail += "k=" + std::to_string(k) + " " + fmt(r.average_error, 4) + " ";
  }
  const auto ds = load_env_dataset(*path, "RUMFIT_SUSHI_FORMAT", "rankings", 2);
  const auto cv = cross_validate(ds, CvConfig{}, PredictModel::rum);
  if (std::abs(cv.mean - 0.023) > 0.005) f.add("cv rmse " + format_double(cv.mean));
  if (cv.stddev < 0.001 || cv.stddev > 0.009) f.add("cv stddev " + format_double(cv.stddev));
  detail += "cv " + fmt(cv.mean, 4) + " +- " + fmt(cv.stddev, 4);
  return {f.any() ? Verdict::fail : Verdict::pass, f.any() ? f.text() : detail};
}

Outcome criterion_mnl() {
  Failures f;
  std::string detail;
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(seed, "acceptance-mnl"));
    const std::size_t k = 2 + seed % 4;
    const Slate s = testutil::random_slates(k + 2, k, 1, rng).front();
    std::vector<ChoiceObservation> obs;
    for (ItemId i : s.items()) obs.push_back({s, i, 1 + uniform_below(rng, 50)});
    const auto ds = aggregate_observations(k + 2, k, obs);
    const auto freq = empirical_distributions(ds)[0].probabilities;
    const auto p = mnl_predict(mnl_fit(ds), s);
    for (std::size_t i = 0; i < k; ++i) worst = std::max(worst, std::abs(p[i] - freq[i]));
  }
  if (worst > 1e-4) f.add("single-slate deviation " + format_double(worst));
  detail = "20 single slates, max deviation " + format_double(worst);

  if (const auto path = env("RUMFIT_SUSHI")) {
    const auto ds = load_env_dataset(*path, "RUMFIT_SUSHI_FORMAT", "rankings", 2);
    const auto t = empirical_distributions(ds);
    std::vector<Slate> slates;
    for (const auto& e : t.entries()) slates.push_back(e.slate);
    const auto pred = mnl_predict_table(mnl_fit(ds), t.universe_size(), slates);
    double err = 0;
    for (std::size_t s = 0; s < t.size(); ++s) {
      err += l1_distance(pred[s].probabilities, t[s].probabilities);
    }
    err /= static_cast<double>(t.size());
    if (std::abs(err - 0.0543) > 0.01) f.add("Sushi k=2 MNL error " + format_double(err));
    detail += "; Sushi k=2 MNL error " + fmt(err, 4);
  }
  return {f.any() ? Verdict::fail : Verdict::pass, f.any() ? f.text() : detail};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RUMFIT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// trace.csv minus its wall-clock column.
std::string trace_without_seconds(const fs::path& p) {
  std::istringstream in(testutil::read_file(p));
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

Outcome criterion_determinism() {
  Failures f;
  const auto root = testutil::temp_dir("acceptance_det");
  Rng rng(derive_seed(1, "acceptance-det"));
  std::string text;
  for (int i = 0; i < 40; ++i) {
    const auto pi = testutil::random_permutation(7, rng);
    for (auto v : pi.order()) text += std::to_string(v) + " ";
    text += '\n';
  }
  const auto data = root / "rankings.txt";
  testutil::write_file(data, text);
  const std::string common = "--data " + data.string() + " --format rankings --k 3 --seed 11";

  std::size_t compared = 0;
  for (const char* run : {"a", "b"}) {
    const auto dir = root / run;
    const std::string out = " --out " + dir.string();
    const std::string cmds[] = {
        "ingest " + common + out,
        "fit " + common + " --t 30 --threads 2" + out,
        "lower-bound " + common + " --rum " + (dir / "rum.txt").string() + out,
        "eval " + common + " --model mnl --out " + (dir / "eval").string(),
        "crossval " + common + " --models rum,mnl,tensor --folds 3 --seeds 1,2 --t 20" +
            " --threads 3 --out " + (dir / "cv").string(),
    };
    for (const auto& c : cmds) {
      if (int code = run_cli(c); code != 0) f.add("exit " + std::to_string(code) + ": " + c);
    }
  }
  if (f.any()) return {Verdict::fail, f.text()};
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), root / "a");
    const auto other = root / "b" / rel;
    const bool same = rel.filename() == "trace.csv"
                          ? trace_without_seconds(entry.path()) == trace_without_seconds(other)
                          : testutil::read_file(entry.path()) == testutil::read_file(other);
    if (!same) f.add(rel.string() + " differs");
    ++compared;
  }
  if (compared < 10) f.add("only " + std::to_string(compared) + " files produced");
  fs::remove_all(root);
  return {f.any() ? Verdict::fail : Verdict::pass,
          f.any() ? f.text() : std::to_string(compared) + " report files identical"};
}

}  // namespace

int main() {
  const auto insts = oracle_instances();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"wfhs oracle equivalence", [&] { return criterion_oracle_equivalence(insts); }},
      {"local search soundness", [&] { return criterion_local_search(insts); }},
      {"lp duality", criterion_lp_duality},
      {"exact recoverability", criterion_exact_recovery},
      {"tight lower bound", criterion_tight_lower_bound},
      {"sushi reproduction", criterion_sushi_numbers},
      {"mnl baseline sanity", criterion_mnl},
      {"determinism", criterion_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Verdict::fail, std::string("exception: ") + e.what()};
    }
    const char* v = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIPPED";
    if (o.verdict == Verdict::fail) ++failed;
    std::cout << v << "  " << i + 1 << ". " << criteria[i].first << ": " << o.detail << " [" << fmt(seconds_since(t0), 1)
              << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
