// Dense revised simplex for small linear programs
//
//   min c'x   subject to   a_r x (>= | <= | =) b_r,   x >= 0,
//
// with row dual values. Dantzig pricing with a Harris ratio test; after a
// run of degenerate pivots it falls back to Bland's rule until progress
// resumes. The basis inverse is kept explicitly and rebuilt periodically.
//
// Dual sign convention (minimization): >= rows have nonnegative duals, <=
// rows nonpositive, = rows free. Strong duality reads c'x = sum_r b_r y_r.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace rumfit {

enum class RowSense { greater_equal, less_equal, equal };

struct LpEntry {
  std::size_t row = 0;
  double value = 0.0;
};

class LpModel {
 public:
  std::size_t add_row(RowSense sense, double rhs, std::string name = {});
  // Entries must reference existing rows; duplicates are summed.
  std::size_t add_column(double cost, std::vector<LpEntry> entries, std::string name = {});

  std::size_t row_count() const { return row_sense_.size(); }
  std::size_t column_count() const { return cost_.size(); }
  RowSense row_sense(std::size_t r) const { return row_sense_[r]; }
  double rhs(std::size_t r) const { return rhs_[r]; }
  const std::string& row_name(std::size_t r) const { return row_name_[r]; }
  double cost(std::size_t j) const { return cost_[j]; }
  const std::vector<LpEntry>& column(std::size_t j) const { return columns_[j]; }
  const std::string& column_name(std::size_t j) const { return column_name_[j]; }

 private:
  std::vector<RowSense> row_sense_;
  std::vector<double> rhs_;
  std::vector<std::string> row_name_;
  std::vector<double> cost_;
  std::vector<std::vector<LpEntry>> columns_;
  std::vector<std::string> column_name_;
};

enum class LpStatus { optimal, infeasible, unbounded, numeric_failure };

std::string to_string(LpStatus s);

// One basic variable per row. Slack/artificial entries are identified by
// their row, so a basis stays meaningful after columns are appended.
struct BasisEntry {
  enum class Kind : std::uint8_t { structural, slack, artificial };
  Kind kind = Kind::structural;
  std::size_t index = 0;

  friend bool operator==(const BasisEntry&, const BasisEntry&) = default;
};
using LpBasis = std::vector<BasisEntry>;

struct SimplexOptions {
  double pivot_tol = 1e-9;
  double feasibility_tol = 1e-8;
  // Reduced costs above -optimality_tol count as nonnegative.
  double optimality_tol = 1e-11;
  std::size_t refactor_interval = 100;
  // Consecutive degenerate pivots before the right-hand side is perturbed
  // (first time) or Bland's rule takes over (second time).
  std::size_t degenerate_switch = 50;
  // Scale of the right-hand-side perturbation.
  double perturbation = 1e-7;
  // 0 selects 50 * (rows + columns) + 1000.
  std::size_t max_iterations = 0;
};

struct LpSolution {
  LpStatus status = LpStatus::numeric_failure;
  double objective = 0.0;
  double dual_objective = 0.0;
  std::vector<double> primal;     // per column
  std::vector<double> row_duals;  // per row
  LpBasis basis;
  std::size_t iterations = 0;
  bool warm_started = false;
};

// Solves `model`. A `warm` basis that is singular or primal infeasible is
// ignored and the solve starts from scratch (two phases).
LpSolution solve_simplex(const LpModel& model, const SimplexOptions& options = {},
                         const LpBasis* warm = nullptr);

}  // namespace rumfit
