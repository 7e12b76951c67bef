// Restricted primal LP over a finite permutation support:
//
//   min (1/|S|) sum (u_{S,i} + v_{S,i})
//   E_{S,i}:  sum_{pi(S)=i} p_pi + u_{S,i} - v_{S,i} = D_S(i)
//   D:        sum p_pi = 1
//
// u and v carry the residual D_S(i) - R_S(i) split by sign. Their columns
// are opposite, so a basic solution never has both positive and u + v is
// the error eps_{S,i} = |D_S(i) - R_S(i)|. The row dual y_{S,i} is
// -Delta_{S,i} and |y| <= 1/|S| is the dual box.
//
// Pairs (S,i) are numbered slate-major: pair = slate_index * k + position of
// i in the slate. Row q is pair q, then the D row. Columns are u_q, v_q
// interleaved in pair order, then one p column per permutation.

#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rumfit/model.hpp"
#include "rumfit/simplex.hpp"

namespace rumfit {

class RestrictedLp {
 public:
  // Throws std::invalid_argument on an empty support, a permutation of the
  // wrong size, or repeated permutations.
  RestrictedLp(WinnerTable table, std::vector<Permutation> support);

  // Appends a p column; throws std::invalid_argument if pi is already present.
  std::size_t add_permutation(const Permutation& pi);
  bool contains(const Permutation& pi) const;

  const WinnerTable& table() const { return table_; }
  std::span<const Permutation> support() const { return support_; }
  const LpModel& model() const { return model_; }

  std::size_t pair_count() const { return table_.pair_count(); }
  std::size_t pair_index(std::size_t slate, std::size_t position) const {
    return slate * table_.slate_size() + position;
  }
  std::size_t pair_row(std::size_t pair) const { return pair; }
  std::size_t normalization_row() const { return pair_count(); }
  // u: model mass below the observed frequency; v: above it.
  std::size_t under_index(std::size_t pair) const { return 2 * pair; }
  std::size_t over_index(std::size_t pair) const { return 2 * pair + 1; }
  std::size_t p_index(std::size_t support_pos) const { return 2 * pair_count() + support_pos; }

  // Feasible starting basis with all mass on support()[0].
  LpBasis crash_basis() const;

 private:
  WinnerTable table_;
  std::vector<Permutation> support_;
  LpModel model_;
};

// Pluggable LP backend. Implementations must report row duals with the sign
// convention of solve_simplex (>= rows nonnegative under minimization).
class LpSolver {
 public:
  virtual ~LpSolver() = default;
  virtual LpSolution solve(const LpModel& model, const LpBasis* warm) const = 0;
  virtual std::string name() const = 0;
};

class SimplexSolver final : public LpSolver {
 public:
  explicit SimplexSolver(SimplexOptions options = {}) : options_(options) {}
  LpSolution solve(const LpModel& model, const LpBasis* warm) const override;
  std::string name() const override { return "dense-revised-simplex"; }

 private:
  SimplexOptions options_;
};

// Uses SimplexSolver when `solver` is null.
LpSolution solve_lp(const RestrictedLp& lp, const LpBasis* warm = nullptr,
                    const LpSolver* solver = nullptr);

struct DualSolution {
  double D = 0.0;
  // Delta_{S,i} = -dual(E_{S,i}), indexed by pair.
  std::vector<double> delta;
  // D - sum_{S,i} D_S(i) Delta_{S,i}.
  double value = 0.0;
  std::size_t slate_size = 0;

  double at(std::size_t slate, std::size_t position) const {
    return delta[slate * slate_size + position];
  }
  // Throws std::out_of_range when (s, item) is not a pair of `table`.
  double at(const WinnerTable& table, const Slate& s, ItemId item) const;
};

// Throws std::logic_error unless sol.status is optimal.
DualSolution extract_dual(const LpSolution& sol, const RestrictedLp& lp);

// sum_S Delta_{S, pi(S)}: the left side of pi's dual constraint.
double dual_constraint_value(const DualSolution& dual, const WinnerTable& table,
                             const Permutation& pi);

// Fixed-column MPS dump (see docs/mps_format.md).
void write_mps(std::ostream& out, const LpModel& model, const std::string& name = "RUMFIT");

}  // namespace rumfit
