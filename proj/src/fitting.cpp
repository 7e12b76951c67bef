#include "rumfit/fitting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "json.hpp"
#include "rumfit/random.hpp"

namespace rumfit {

std::string to_string(OracleKind k) {
  return k == OracleKind::exact ? "exact" : "local";
}

std::string to_string(WeightMode m) {
  return m == WeightMode::shifted ? "shifted" : "signed";
}

OracleKind parse_oracle_kind(const std::string& s) {
  if (s == "exact") return OracleKind::exact;
  if (s == "local" || s == "local-search") return OracleKind::local_search;
  throw std::invalid_argument("unknown oracle '" + s + "' (expected exact or local)");
}

WeightMode parse_weight_mode(const std::string& s) {
  if (s == "shifted") return WeightMode::shifted;
  if (s == "signed") return WeightMode::signed_weights;
  throw std::invalid_argument("unknown weight mode '" + s + "' (expected shifted or signed)");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::oracle_exhausted: return "oracle-exhausted";
    case StopReason::stalled: return "stalled";
    case StopReason::iteration_cap: return "iteration-cap";
    case StopReason::duplicate_column: return "duplicate-column";
  }
  return "?";
}

void FitConfig::validate() const {
  if (t_prime <= 0 || t_prime > t) throw std::invalid_argument("need 0 < t' <= t");
  if (!(stall_epsilon > 0)) throw std::invalid_argument("stall_epsilon must be positive");
  if (max_iterations == 0) throw std::invalid_argument("max_iterations must be positive");
  if (!(violation_tol >= 0)) throw std::invalid_argument("violation_tol must be nonnegative");
  if (exact_limit > kHardExactLimit) {
    throw std::invalid_argument("exact_limit above " + std::to_string(kHardExactLimit));
  }
}

WfhsInstance make_separation_instance(const WinnerTable& table, const DualSolution& dual,
                                      WeightMode mode) {
  const double box = 1.0 / static_cast<double>(table.size());
  double max_abs = box;
  for (double d : dual.delta) max_abs = std::max(max_abs, std::abs(d));
  std::vector<Hyperedge> edges;
  edges.reserve(table.size());
  for (std::size_t s = 0; s < table.size(); ++s) {
    const Slate& slate = table[s].slate;
    Hyperedge e;
    e.vertices.assign(slate.items().begin(), slate.items().end());
    for (std::size_t pos = 0; pos < slate.size(); ++pos) {
      const double d = dual.at(s, pos);
      e.weights.push_back(mode == WeightMode::shifted ? std::max(0.0, d + box) : d);
    }
    edges.push_back(std::move(e));
  }
  // Solver round-off can push |Delta| a hair past 1/|S|; widen tau to match.
  if (mode == WeightMode::shifted) {
    return WfhsInstance(table.universe_size(), table.slate_size(), box + max_abs, std::move(edges));
  }
  return WfhsInstance::with_signed_weights(table.universe_size(), table.slate_size(), max_abs,
                                           std::move(edges));
}

LowerBound compute_lower_bound(const DualSolution& dual, const WfhsResult& exact) {
  const double y = exact.cost;
  if (y >= dual.D) return {dual.value, true};
  return {dual.value - (dual.D - y), false};
}

LowerBound lower_bound_from_dual(const WinnerTable& table, const DualSolution& dual,
                                 std::size_t exact_limit) {
  const auto inst = make_separation_instance(table, dual, WeightMode::signed_weights);
  return compute_lower_bound(dual, wfhs_exact(inst, exact_limit));
}

SupportBound lower_bound_for_support(const WinnerTable& table, std::vector<Permutation> support,
                                     std::size_t exact_limit) {
  RestrictedLp lp(table, std::move(support));
  const auto sol = solve_lp(lp);
  if (sol.status != LpStatus::optimal) {
    throw std::runtime_error("restricted LP solve failed: " + to_string(sol.status));
  }
  const auto dual = extract_dual(sol, lp);
  return {sol.objective, lower_bound_from_dual(table, dual, exact_limit)};
}

namespace {

struct OracleAnswer {
  std::optional<Permutation> candidate;
  double signed_cost = std::numeric_limits<double>::quiet_NaN();
};

class Separator {
 public:
  Separator(const WinnerTable& table, const FitConfig& cfg) : table_(table), cfg_(cfg) {}

  OracleAnswer query(const DualSolution& dual, std::uint64_t stream) const {
    const auto inst = make_separation_instance(table_, dual, cfg_.weight_mode);
    const double shift = cfg_.weight_mode == WeightMode::shifted ? 1.0 : 0.0;
    const double threshold = dual.D - cfg_.violation_tol;
    OracleAnswer ans;
    std::optional<Permutation> found;
    if (cfg_.oracle == OracleKind::exact) {
      found = wfhs_exact(inst, cfg_.exact_limit).permutation;
    } else {
      LocalSearchOptions opt;
      opt.threshold = threshold + shift;
      opt.restarts = cfg_.t;
      opt.min_restarts = cfg_.t_prime;
      opt.seed = derive_seed(cfg_.seed, stream);
      opt.threads = cfg_.threads;
      auto out = wfhs_local_search_run(inst, opt);
      if (out.result) found = out.result->permutation;
      else ans.signed_cost = out.best_cost - shift;
    }
    if (found) {
      // Re-check on the raw duals; the shifted instance only guides the search.
      ans.signed_cost = dual_constraint_value(dual, table_, *found);
      if (ans.signed_cost < threshold) ans.candidate = std::move(found);
    }
    return ans;
  }

 private:
  const WinnerTable& table_;
  const FitConfig& cfg_;
};

Rum extract_rum(const RestrictedLp& lp, const LpSolution& sol) {
  std::vector<RumComponent> comps;
  double total = 0.0;
  for (std::size_t j = 0; j < lp.support().size(); ++j) {
    const double p = sol.primal[lp.p_index(j)];
    if (p > 1e-12) {
      comps.push_back({lp.support()[j], p});
      total += p;
    }
  }
  for (auto& c : comps) c.probability = std::min(1.0, c.probability / total);
  return Rum(std::move(comps));
}

}  // namespace

FitReport fit_rum(const WinnerTable& table, const FitConfig& cfg, const LpSolver* solver) {
  cfg.validate();
  if (table.empty()) throw std::invalid_argument("cannot fit an empty table");
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  RestrictedLp lp(table, {Permutation::identity(table.universe_size())});
  LpBasis basis = lp.crash_basis();
  const Separator separator(table, cfg);
  FitReport report;
  LpSolution sol;
  DualSolution dual;

  for (std::size_t iter = 1;; ++iter) {
    sol = solve_lp(lp, &basis, solver);
    if (sol.status != LpStatus::optimal) {
      throw FitError("LP solve failed at iteration " + std::to_string(iter) + ": " +
                         to_string(sol.status),
                     std::move(report.trace));
    }
    basis = sol.basis;
    dual = extract_dual(sol, lp);

    FitIteration rec;
    rec.iteration = iter;
    rec.support_size = lp.support().size();
    rec.objective = sol.objective;
    rec.dual_D = dual.D;
    rec.oracle_cost = std::numeric_limits<double>::quiet_NaN();

    const auto& tr = report.trace;
    if (cfg.stall_window > 0 && tr.size() >= cfg.stall_window &&
        tr[tr.size() - cfg.stall_window].objective - sol.objective < cfg.stall_epsilon) {
      report.stop_reason = StopReason::stalled;
    } else if (iter > cfg.max_iterations) {
      report.stop_reason = StopReason::iteration_cap;
    } else {
      auto ans = separator.query(dual, iter);
      if (ans.candidate && lp.contains(*ans.candidate)) {
        ans = separator.query(dual, derive_seed(derive_seed(cfg.seed, "retry"), iter));
        if (ans.candidate && lp.contains(*ans.candidate)) {
          rec.oracle_cost = ans.signed_cost;
          rec.seconds = elapsed();
          report.trace.push_back(rec);
          report.stop_reason = StopReason::duplicate_column;
          break;
        }
      }
      rec.oracle_cost = ans.signed_cost;
      if (ans.candidate) {
        lp.add_permutation(*ans.candidate);
        rec.added = true;
      } else {
        report.stop_reason = StopReason::oracle_exhausted;
      }
    }
    rec.seconds = elapsed();
    report.trace.push_back(rec);
    if (!rec.added) break;
  }

  report.rum = extract_rum(lp, sol);
  report.average_error = average_l1_error(report.rum, table);
  report.lp_objective = sol.objective;
  report.converged = report.stop_reason == StopReason::oracle_exhausted;
  report.lp_support_size = lp.support().size();
  report.final_dual = dual;
  if (cfg.compute_lower_bound && table.universe_size() <= cfg.exact_limit) {
    report.lower_bound = lower_bound_from_dual(table, dual, cfg.exact_limit);
  }
  return report;
}

void write_fit_report_json(std::ostream& out, const FitReport& report, const WinnerTable& table,
                           const FitConfig& cfg, const FitReportContext& ctx) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["n"] = table.universe_size();
  j["k"] = table.slate_size();
  j["slate_count"] = table.size();
  j["support_size"] = report.rum.support().size();
  j["average_error"] = report.average_error;
  j["lower_bound"] = report.lower_bound ? ordered_json(report.lower_bound->value) : nullptr;
  j["converged"] = report.converged;
  j["iterations"] = report.trace.size();
  ordered_json c;
  c["oracle"] = to_string(cfg.oracle);
  c["t"] = cfg.t;
  c["t_prime"] = cfg.t_prime;
  c["max_iterations"] = cfg.max_iterations;
  c["stall_window"] = cfg.stall_window;
  c["stall_epsilon"] = cfg.stall_epsilon;
  c["seed"] = cfg.seed;
  c["threads"] = cfg.threads;
  c["weight_mode"] = to_string(cfg.weight_mode);
  c["violation_tol"] = cfg.violation_tol;
  c["exact_limit"] = cfg.exact_limit;
  j["config"] = c;
  j["rum_file"] = ctx.rum_file;
  if (!ctx.dataset.empty()) j["dataset"] = ctx.dataset;
  j["stop_reason"] = to_string(report.stop_reason);
  j["lp_objective"] = report.lp_objective;
  j["lp_support_size"] = report.lp_support_size;
  if (report.lower_bound) {
    j["lower_bound_tight"] = report.lower_bound->tight;
    j["dual_certificate"] = "basic dual of the final restricted LP";
  }
  if (!ctx.labels.empty()) {
    ordered_json items = ordered_json::array();
    for (const auto& l : ctx.labels) items.push_back(l ? ordered_json(*l) : ordered_json(nullptr));
    j["item_labels"] = items;
  }
  out << j.dump(2) << '\n';
}

void write_fit_trace_csv(std::ostream& out, const FitTrace& trace) {
  out << "iteration,objective,dual_D,oracle_cost,seconds\n";
  for (const auto& r : trace) {
    out << r.iteration << ',' << format_double(r.objective) << ',' << format_double(r.dual_D) << ','
        << (std::isnan(r.oracle_cost) ? std::string() : format_double(r.oracle_cost)) << ','
        << format_double(r.seconds) << '\n';
  }
}

}  // namespace rumfit
