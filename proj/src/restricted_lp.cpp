#include "rumfit/lp.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace rumfit {

RestrictedLp::RestrictedLp(WinnerTable table, std::vector<Permutation> support)
    : table_(std::move(table)) {
  if (support.empty()) throw std::invalid_argument("restricted LP needs a nonempty support");
  if (table_.empty()) throw std::invalid_argument("restricted LP needs a nonempty table");
  const double inv_slates = 1.0 / static_cast<double>(table_.size());
  const std::size_t k = table_.slate_size();
  for (std::size_t s = 0; s < table_.size(); ++s) {
    for (std::size_t pos = 0; pos < k; ++pos) {
      model_.add_row(RowSense::equal, table_[s].probabilities[pos],
                     "E" + std::to_string(s) + "_" + std::to_string(pos));
    }
  }
  model_.add_row(RowSense::equal, 1.0, "D");
  for (std::size_t q = 0; q < pair_count(); ++q) {
    model_.add_column(inv_slates, {{pair_row(q), 1.0}}, "u" + std::to_string(q));
    model_.add_column(inv_slates, {{pair_row(q), -1.0}}, "v" + std::to_string(q));
  }
  for (const auto& pi : support) add_permutation(pi);
}

bool RestrictedLp::contains(const Permutation& pi) const {
  return std::find(support_.begin(), support_.end(), pi) != support_.end();
}

std::size_t RestrictedLp::add_permutation(const Permutation& pi) {
  if (pi.size() != table_.universe_size()) {
    throw std::invalid_argument("permutation size does not match the universe");
  }
  if (contains(pi)) throw std::invalid_argument("permutation already in the support");
  std::vector<LpEntry> entries;
  entries.reserve(table_.size() + 1);
  for (std::size_t s = 0; s < table_.size(); ++s) {
    const Slate& slate = table_[s].slate;
    const std::size_t q = pair_index(s, slate.index_of(permutation_winner(pi, slate)));
    entries.push_back({pair_row(q), 1.0});
  }
  entries.push_back({normalization_row(), 1.0});
  model_.add_column(0.0, std::move(entries), "p" + std::to_string(support_.size()));
  support_.push_back(pi);
  return support_.size() - 1;
}

LpBasis RestrictedLp::crash_basis() const {
  // With p_0 = 1 the winner pair is over by 1 - d (v basic) and every other
  // pair is under by d (u basic).
  LpBasis basis;
  basis.reserve(model_.row_count());
  const Permutation& pi = support_.front();
  for (std::size_t s = 0; s < table_.size(); ++s) {
    const Slate& slate = table_[s].slate;
    const std::size_t win = slate.index_of(permutation_winner(pi, slate));
    for (std::size_t pos = 0; pos < slate.size(); ++pos) {
      const std::size_t q = pair_index(s, pos);
      basis.push_back({BasisEntry::Kind::structural, pos == win ? over_index(q) : under_index(q)});
    }
  }
  basis.push_back({BasisEntry::Kind::structural, p_index(0)});
  return basis;
}

LpSolution SimplexSolver::solve(const LpModel& model, const LpBasis* warm) const {
  return solve_simplex(model, options_, warm);
}

LpSolution solve_lp(const RestrictedLp& lp, const LpBasis* warm, const LpSolver* solver) {
  static const SimplexSolver fallback;
  return (solver ? *solver : fallback).solve(lp.model(), warm);
}

double DualSolution::at(const WinnerTable& table, const Slate& s, ItemId item) const {
  const std::size_t idx = table.find(s);
  if (idx == table.size()) throw std::out_of_range("slate not in table: " + to_string(s));
  const std::size_t pos = s.index_of(item);
  if (pos == s.size()) throw std::out_of_range("item not in slate");
  return at(idx, pos);
}

DualSolution extract_dual(const LpSolution& sol, const RestrictedLp& lp) {
  if (sol.status != LpStatus::optimal) {
    throw std::logic_error("dual requested for a non-optimal LP (" + to_string(sol.status) + ")");
  }
  DualSolution dual;
  dual.slate_size = lp.table().slate_size();
  dual.D = sol.row_duals[lp.normalization_row()];
  dual.delta.resize(lp.pair_count());
  dual.value = dual.D;
  for (std::size_t s = 0; s < lp.table().size(); ++s) {
    const auto& probs = lp.table()[s].probabilities;
    for (std::size_t pos = 0; pos < probs.size(); ++pos) {
      const std::size_t q = lp.pair_index(s, pos);
      dual.delta[q] = -sol.row_duals[lp.pair_row(q)];
      dual.value -= probs[pos] * dual.delta[q];
    }
  }
  return dual;
}

double dual_constraint_value(const DualSolution& dual, const WinnerTable& table,
                             const Permutation& pi) {
  double sum = 0.0;
  for (std::size_t s = 0; s < table.size(); ++s) {
    const Slate& slate = table[s].slate;
    sum += dual.at(s, slate.index_of(permutation_winner(pi, slate)));
  }
  return sum;
}

namespace {

std::string mps_number(double v) { return format_double(v); }

void mps_line(std::ostream& out, const std::string& a, const std::string& b,
              const std::string& c = {}, const std::string& d = {}) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "    %-8s  %-8s  %12s", a.c_str(), b.c_str(), c.c_str());
  out << buf;
  if (!d.empty()) out << "   " << d;
  out << '\n';
}

}  // namespace

void write_mps(std::ostream& out, const LpModel& model, const std::string& name) {
  auto row_label = [&](std::size_t r) {
    return model.row_name(r).empty() ? "R" + std::to_string(r) : model.row_name(r);
  };
  auto col_label = [&](std::size_t j) {
    return model.column_name(j).empty() ? "C" + std::to_string(j) : model.column_name(j);
  };
  out << "NAME          " << name << '\n' << "ROWS\n" << " N  COST\n";
  for (std::size_t r = 0; r < model.row_count(); ++r) {
    const char* tag = model.row_sense(r) == RowSense::greater_equal ? "G"
                      : model.row_sense(r) == RowSense::less_equal  ? "L"
                                                                    : "E";
    out << ' ' << tag << "  " << row_label(r) << '\n';
  }
  out << "COLUMNS\n";
  for (std::size_t j = 0; j < model.column_count(); ++j) {
    if (model.cost(j) != 0.0) mps_line(out, col_label(j), "COST", mps_number(model.cost(j)));
    for (const auto& e : model.column(j)) {
      mps_line(out, col_label(j), row_label(e.row), mps_number(e.value));
    }
  }
  out << "RHS\n";
  for (std::size_t r = 0; r < model.row_count(); ++r) {
    if (model.rhs(r) != 0.0) mps_line(out, "RHS", row_label(r), mps_number(model.rhs(r)));
  }
  out << "ENDATA\n";
}

}  // namespace rumfit
