// Weighted feedback hyperedge set (WFHS).
//
// Given hyperedges e of k vertices with per-member weights w_e(v), find a
// permutation minimizing C(pi) = sum_e w_e(pi(e)), where pi(e) is the member
// of e ranked highest by pi. This is the separation problem behind the RUM
// column generation: edges are slates and weights are dual values.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rumfit/model.hpp"

namespace rumfit {

struct Hyperedge {
  // Sorted ascending; weights[i] belongs to vertices[i].
  std::vector<ItemId> vertices;
  std::vector<double> weights;
};

class WfhsInstance {
 public:
  // Weights must lie in [0, tau]. Vertices of each edge are sorted together
  // with their weights. Throws std::invalid_argument on malformed input.
  WfhsInstance(std::size_t n, std::size_t k, double tau, std::vector<Hyperedge> edges);

  // Same, but weights may be negative: |w| <= tau. The solvers never rely on
  // the sign, which lets the separation oracle run on raw dual values.
  static WfhsInstance with_signed_weights(std::size_t n, std::size_t k, double tau,
                                          std::vector<Hyperedge> edges);

  std::size_t vertex_count() const { return n_; }
  std::size_t edge_size() const { return k_; }
  double tau() const { return tau_; }
  bool signed_weights() const { return signed_; }
  const std::vector<Hyperedge>& edges() const { return edges_; }

 private:
  WfhsInstance(std::size_t n, std::size_t k, double tau, std::vector<Hyperedge> edges,
               bool signed_weights);

  std::size_t n_ = 0;
  std::size_t k_ = 0;
  double tau_ = 0.0;
  bool signed_ = false;
  std::vector<Hyperedge> edges_;
};

enum class WfhsMethod { exact, local_search, brute_force };

std::string to_string(WfhsMethod m);

struct WfhsResult {
  Permutation permutation;
  // wfhs_cost(instance, permutation).
  double cost = 0.0;
  WfhsMethod method = WfhsMethod::exact;
  std::size_t restarts_used = 0;
};

// Requested instance exceeds what a solver is allowed to handle.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sum over edges, in edge order, of the weight of the edge's winner.
double wfhs_cost(const WfhsInstance& inst, const Permutation& pi);

inline constexpr std::size_t kBruteForceLimit = 9;
inline constexpr std::size_t kDefaultExactLimit = 24;
inline constexpr std::size_t kHardExactLimit = 30;

// Enumerates all n! permutations; the lexicographically smallest optimal
// permutation wins ties. Throws CapacityError when n > kBruteForceLimit.
WfhsResult wfhs_brute_force(const WfhsInstance& inst);

// Subset dynamic program over 2^n vertex sets:
//   C(A) = min_{a in A} C(A \ {a}) + sum_{e subset of A, a in e} w_e(a),
// where a is the highest ranked member of A. The permutation is rebuilt
// front to back from the stored minimizers. The result's cost is recomputed
// with wfhs_cost; dp_value (when requested) receives C([n]).
// Throws CapacityError when n exceeds max_vertices (capped at kHardExactLimit).
WfhsResult wfhs_exact(const WfhsInstance& inst, std::size_t max_vertices = kDefaultExactLimit,
                      double* dp_value = nullptr);

struct LocalSearchOptions {
  // A restart result counts as found only when its cost is strictly below.
  double threshold = 0.0;
  int restarts = 100;      // t
  int min_restarts = 5;    // t'
  std::uint64_t seed = 0;
  unsigned threads = 1;
  // Keep the cost after every accepted move of every restart.
  bool record_traces = false;
};

struct LocalSearchOutcome {
  // Best permutation found, present only when its cost < threshold.
  std::optional<WfhsResult> result;
  // Best cost seen over the restarts that were run, found or not.
  double best_cost = 0.0;
  std::size_t restarts_used = 0;
  // traces[r] = costs of restart r: start, then after every accepted move.
  std::vector<std::vector<double>> traces;
};

// Moves are accepted only when they improve the cost by more than this.
inline constexpr double kLocalSearchImproveTol = 1e-12;

// Randomized restarts of steepest descent over single-element insertion
// moves. Stops after the first restart index i >= t' (1-based) at which the
// best cost so far is < threshold; otherwise runs all t restarts and reports
// nothing found. Throws std::invalid_argument unless 0 < t' <= t.
LocalSearchOutcome wfhs_local_search_run(const WfhsInstance& inst, const LocalSearchOptions& opt);

std::optional<WfhsResult> wfhs_local_search(const WfhsInstance& inst, double threshold, int t,
                                            int t_prime, std::uint64_t seed);

// Steepest descent from `start` (one restart). Exposed for tests; `trace`
// receives the cost sequence when non-null.
Permutation wfhs_descend(const WfhsInstance& inst, Permutation start,
                         std::vector<double>* trace = nullptr);

// Instance file: header `wfhs n=<n> k=<k> tau=<tau>`, then one
// `v1,...,vk : w1,...,wk` line per edge.
void write_wfhs_instance(std::ostream& out, const WfhsInstance& inst);
WfhsInstance read_wfhs_instance(std::istream& in);

}  // namespace rumfit
