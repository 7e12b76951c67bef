// Column generation fit of a RUM to a winner table.
//
// The restricted LP starts from the identity permutation. After each solve
// the dual (D, Delta) defines a WFHS instance whose edges are the slates;
// any permutation with sum_S Delta_{S,pi(S)} < D violates the dual and joins
// the support. The loop ends when the oracle finds nothing or a cap hits.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rumfit/ingest.hpp"
#include "rumfit/lp.hpp"
#include "rumfit/model.hpp"
#include "rumfit/wfhs.hpp"

namespace rumfit {

enum class OracleKind { exact, local_search };
// shifted: weights Delta + 1/|S| in [0, 2/|S|]; every cost grows by exactly 1.
// signed: raw Delta in [-1/|S|, 1/|S|].
enum class WeightMode { shifted, signed_weights };

std::string to_string(OracleKind k);
std::string to_string(WeightMode m);
OracleKind parse_oracle_kind(const std::string& s);  // "exact" | "local"
WeightMode parse_weight_mode(const std::string& s);  // "shifted" | "signed"

struct FitConfig {
  OracleKind oracle = OracleKind::local_search;
  int t = 100;
  int t_prime = 5;
  std::size_t max_iterations = 1500;
  // Stop when the objective drops by less than stall_epsilon over this many
  // iterations; 0 disables the rule.
  std::size_t stall_window = 20;
  double stall_epsilon = 1e-5;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  WeightMode weight_mode = WeightMode::shifted;
  // A candidate must satisfy sum Delta < D - violation_tol.
  double violation_tol = 1e-9;
  bool compute_lower_bound = true;
  std::size_t exact_limit = kDefaultExactLimit;

  // Throws std::invalid_argument.
  void validate() const;
};

enum class StopReason { oracle_exhausted, stalled, iteration_cap, duplicate_column };

std::string to_string(StopReason r);

struct FitIteration {
  std::size_t iteration = 0;  // 1-based
  std::size_t support_size = 0;
  double objective = 0.0;
  double dual_D = 0.0;
  // Signed oracle cost sum Delta_{S,pi(S)}; NaN when no candidate came back.
  double oracle_cost = 0.0;
  bool added = false;
  double seconds = 0.0;  // since the fit started
};

using FitTrace = std::vector<FitIteration>;

struct LowerBound {
  double value = 0.0;
  bool tight = false;
};

struct FitReport {
  Rum rum = Rum::point_mass(Permutation::identity(1));
  double average_error = 0.0;
  double lp_objective = 0.0;
  std::optional<LowerBound> lower_bound;
  FitTrace trace;
  bool converged = false;
  StopReason stop_reason = StopReason::oracle_exhausted;
  std::size_t lp_support_size = 0;  // columns in the final LP
  DualSolution final_dual;
};

// LP solve failure during a fit; carries the iterations completed so far.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, FitTrace trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const FitTrace& trace() const { return trace_; }

 private:
  FitTrace trace_;
};

// Edges = slates of `table`, weights from `dual` per `mode`.
WfhsInstance make_separation_instance(const WinnerTable& table, const DualSolution& dual,
                                      WeightMode mode);

// y = exact.cost on the signed instance. y >= D: the restricted optimum v
// is optimal overall; otherwise v - (D - y) bounds the optimum from below.
LowerBound compute_lower_bound(const DualSolution& dual, const WfhsResult& exact);

// Exact signed WFHS on `dual`, then compute_lower_bound. Throws
// CapacityError above `exact_limit` vertices.
LowerBound lower_bound_from_dual(const WinnerTable& table, const DualSolution& dual,
                                 std::size_t exact_limit = kDefaultExactLimit);

struct SupportBound {
  double objective = 0.0;  // restricted LP optimum v
  LowerBound bound;
};

// Solves the restricted LP over `support` and certifies it with the exact
// oracle (the lower-bound subcommand's path for an existing RUM).
SupportBound lower_bound_for_support(const WinnerTable& table, std::vector<Permutation> support,
                                     std::size_t exact_limit = kDefaultExactLimit);

FitReport fit_rum(const WinnerTable& table, const FitConfig& cfg,
                  const LpSolver* solver = nullptr);

struct FitReportContext {
  std::string rum_file;
  std::string dataset;
  ItemLabels labels;  // raw ids, may be empty
};

void write_fit_report_json(std::ostream& out, const FitReport& report, const WinnerTable& table,
                           const FitConfig& cfg, const FitReportContext& ctx);
void write_fit_trace_csv(std::ostream& out, const FitTrace& trace);

}  // namespace rumfit
