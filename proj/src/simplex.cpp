#include "rumfit/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace rumfit {

std::size_t LpModel::add_row(RowSense sense, double rhs, std::string name) {
  row_sense_.push_back(sense);
  rhs_.push_back(rhs);
  row_name_.push_back(std::move(name));
  return row_sense_.size() - 1;
}

std::size_t LpModel::add_column(double cost, std::vector<LpEntry> entries, std::string name) {
  std::sort(entries.begin(), entries.end(), [](auto a, auto b) { return a.row < b.row; });
  std::vector<LpEntry> merged;
  for (const auto& e : entries) {
    if (e.row >= row_count()) throw std::invalid_argument("LP column references missing row");
    if (!merged.empty() && merged.back().row == e.row) {
      merged.back().value += e.value;
    } else {
      merged.push_back(e);
    }
  }
  std::erase_if(merged, [](const LpEntry& e) { return e.value == 0.0; });
  cost_.push_back(cost);
  columns_.push_back(std::move(merged));
  column_name_.push_back(std::move(name));
  return cost_.size() - 1;
}

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::numeric_failure: return "numeric-failure";
  }
  return "?";
}

namespace {

struct SparseEntry {
  std::size_t row;
  double value;
};

// Internal form: every row scaled by sigma_r in {+1,-1} so that b >= 0, one
// slack per inequality row and one artificial per row. Variable layout:
//   [0, ns)            structural
//   [ns, ns + m)       slack of row (j - ns)       (absent for = rows)
//   [ns + m, ns + 2m)  artificial of row (j - ns - m)
class Engine {
 public:
  Engine(const LpModel& model, const SimplexOptions& opt) : model_(model), opt_(opt) {
    m_ = model.row_count();
    ns_ = model.column_count();
    nv_ = ns_ + 2 * m_;
    sigma_.resize(m_);
    b_.resize(m_);
    for (std::size_t r = 0; r < m_; ++r) {
      sigma_[r] = model.rhs(r) < 0 ? -1.0 : 1.0;
      b_[r] = sigma_[r] * model.rhs(r);
    }
    b_orig_ = b_;
    cols_.resize(nv_);
    exists_.assign(nv_, true);
    for (std::size_t j = 0; j < ns_; ++j) {
      for (const auto& e : model.column(j)) cols_[j].push_back({e.row, sigma_[e.row] * e.value});
    }
    for (std::size_t r = 0; r < m_; ++r) {
      const auto sense = model.row_sense(r);
      if (sense == RowSense::equal) {
        exists_[ns_ + r] = false;
      } else {
        const double coef = sense == RowSense::greater_equal ? -1.0 : 1.0;
        cols_[ns_ + r].push_back({r, sigma_[r] * coef});
      }
      cols_[ns_ + m_ + r].push_back({r, 1.0});
    }
    max_iter_ = opt.max_iterations ? opt.max_iterations : 50 * (m_ + ns_) + 1000;
    find_complements();
  }

  // A warm start that breaks down numerically is retried from scratch.
  LpSolution solve(const LpBasis* warm) {
    bool warm_ok = false;
    if (warm && warm->size() == m_) warm_ok = try_warm(*warm);
    LpSolution sol = run(warm_ok);
    if (warm_ok && sol.status == LpStatus::numeric_failure) {
      b_ = b_orig_;
      perturbed_ = false;
      iterations_ = 0;
      sol = run(false);
    }
    return sol;
  }

 private:
  enum class Phase { one, two };

  LpSolution run(bool warm_ok) {
    LpSolution sol;
    sol.warm_started = warm_ok;
    if (!warm_ok) {
      cold_start();
      const auto status = iterate(Phase::one);
      if (status != LpStatus::optimal) return finish(sol, status);
      double infeas = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        if (is_artificial(head_[i])) infeas += std::max(0.0, x_[i]);
      }
      if (infeas > opt_.feasibility_tol * std::max<double>(1.0, static_cast<double>(m_))) {
        return finish(sol, LpStatus::infeasible);
      }
      drive_out_artificials();
    }
    for (std::size_t j = ns_ + m_; j < nv_; ++j) allowed_[j] = false;
    return finish(sol, iterate(Phase::two));
  }

  bool is_artificial(std::size_t j) const { return j >= ns_ + m_; }

  // Pairs structural columns that are exact negations of each other, such
  // as the two halves of a split free variable.
  void find_complements() {
    complement_.assign(nv_, kNone);
    std::map<std::vector<std::pair<std::size_t, double>>, std::size_t> seen;
    std::vector<std::pair<std::size_t, double>> key, neg;
    for (std::size_t j = 0; j < ns_; ++j) {
      if (cols_[j].empty()) continue;
      key.clear();
      neg.clear();
      for (const auto& e : cols_[j]) {
        key.emplace_back(e.row, e.value);
        neg.emplace_back(e.row, -e.value);
      }
      const auto it = seen.find(neg);
      if (it != seen.end() && complement_[it->second] == kNone) {
        complement_[j] = it->second;
        complement_[it->second] = j;
      } else {
        seen.emplace(key, j);
      }
    }
    has_complements_ = std::any_of(complement_.begin(), complement_.end(),
                                   [](std::size_t c) { return c != kNone; });
  }

  double cost(std::size_t j, Phase phase) const {
    if (phase == Phase::one) return is_artificial(j) ? 1.0 : 0.0;
    return j < ns_ ? model_.cost(j) : 0.0;
  }

  void set_head(std::vector<std::size_t> head) {
    head_ = std::move(head);
    where_.assign(nv_, kNone);
    for (std::size_t i = 0; i < m_; ++i) where_[head_[i]] = i;
    allowed_.assign(nv_, true);
    for (std::size_t j = 0; j < nv_; ++j) {
      if (!exists_[j]) allowed_[j] = false;
    }
  }

  void cold_start() {
    std::vector<std::size_t> head(m_);
    for (std::size_t r = 0; r < m_; ++r) {
      const std::size_t slack = ns_ + r;
      const bool unit_slack = exists_[slack] && cols_[slack].front().value > 0;
      head[r] = unit_slack ? slack : ns_ + m_ + r;
    }
    set_head(std::move(head));
    if (!refactor()) throw std::logic_error("identity basis reported singular");
  }

  bool try_warm(const LpBasis& basis) {
    std::vector<std::size_t> head(m_);
    std::vector<bool> seen(nv_, false);
    for (std::size_t i = 0; i < m_; ++i) {
      const auto& e = basis[i];
      std::size_t j = 0;
      switch (e.kind) {
        case BasisEntry::Kind::structural:
          if (e.index >= ns_) return false;
          j = e.index;
          break;
        case BasisEntry::Kind::slack:
          if (e.index >= m_ || !exists_[ns_ + e.index]) return false;
          j = ns_ + e.index;
          break;
        case BasisEntry::Kind::artificial:
          if (e.index >= m_) return false;
          j = ns_ + m_ + e.index;
          break;
      }
      if (seen[j]) return false;
      seen[j] = true;
      head[i] = j;
    }
    set_head(std::move(head));
    if (!refactor()) return false;
    for (std::size_t i = 0; i < m_; ++i) {
      if (x_[i] < -opt_.feasibility_tol) return false;
      if (is_artificial(head_[i]) && x_[i] > opt_.feasibility_tol) return false;
    }
    return true;
  }

  // Rebuilds the explicit inverse by Gauss-Jordan elimination with partial
  // pivoting, then x_B = B^-1 b.
  bool refactor() {
    std::vector<double> work(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      for (const auto& e : cols_[head_[i]]) work[e.row * m_ + i] = e.value;
    }
    binv_.assign(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = 1.0;
    std::vector<std::size_t> wnz, bnz;
    for (std::size_t c = 0; c < m_; ++c) {
      std::size_t p = c;
      double best = std::abs(work[c * m_ + c]);
      for (std::size_t r = c + 1; r < m_; ++r) {
        const double v = std::abs(work[r * m_ + c]);
        if (v > best) {
          best = v;
          p = r;
        }
      }
      if (best < 1e-12) return false;
      if (p != c) {
        std::swap_ranges(work.begin() + p * m_, work.begin() + (p + 1) * m_, work.begin() + c * m_);
        std::swap_ranges(binv_.begin() + p * m_, binv_.begin() + (p + 1) * m_,
                         binv_.begin() + c * m_);
      }
      const double inv = 1.0 / work[c * m_ + c];
      double* wc = &work[c * m_];
      double* bc = &binv_[c * m_];
      // Bases are mostly unit and two-entry columns, so the pivot rows are
      // sparse; eliminating through their nonzero lists keeps this cheap.
      wnz.clear();
      bnz.clear();
      for (std::size_t k = c; k < m_; ++k) {
        if (wc[k] != 0.0) {
          wc[k] *= inv;
          wnz.push_back(k);
        }
      }
      for (std::size_t k = 0; k < m_; ++k) {
        if (bc[k] != 0.0) {
          bc[k] *= inv;
          bnz.push_back(k);
        }
      }
      for (std::size_t r = 0; r < m_; ++r) {
        if (r == c) continue;
        const double f = work[r * m_ + c];
        if (f == 0.0) continue;
        double* wr = &work[r * m_];
        double* br = &binv_[r * m_];
        for (std::size_t k : wnz) wr[k] -= f * wc[k];
        for (std::size_t k : bnz) br[k] -= f * bc[k];
      }
    }
    // Rows of work now hold the identity permuted back; binv_ rows are in
    // basis-position order because column i of B was basis position i.
    x_.assign(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      double s = 0.0;
      const double* row = &binv_[i * m_];
      for (std::size_t r = 0; r < m_; ++r) s += row[r] * b_[r];
      x_[i] = s;
    }
    since_refactor_ = 0;
    return true;
  }

  void compute_duals(Phase phase) {
    y_.assign(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const double c = cost(head_[i], phase);
      if (c == 0.0) continue;
      const double* row = &binv_[i * m_];
      for (std::size_t r = 0; r < m_; ++r) y_[r] += c * row[r];
    }
  }

  double reduced_cost(std::size_t j, Phase phase) const {
    double d = cost(j, phase);
    for (const auto& e : cols_[j]) d -= y_[e.row] * e.value;
    return d;
  }

  void ftran(std::size_t j, std::vector<double>& alpha) const {
    alpha.assign(m_, 0.0);
    for (const auto& e : cols_[j]) {
      for (std::size_t i = 0; i < m_; ++i) alpha[i] += binv_[i * m_ + e.row] * e.value;
    }
  }

  // clamp = false lets a negative leaving value through (dual simplex).
  void pivot(std::size_t leave_pos, std::size_t enter, const std::vector<double>& alpha,
             double d_enter, bool clamp = true) {
    const double piv = alpha[leave_pos];
    double* prow = &binv_[leave_pos * m_];
    pnz_.clear();
    for (std::size_t k = 0; k < m_; ++k) {
      if (prow[k] != 0.0) {
        prow[k] /= piv;
        pnz_.push_back(k);
      }
    }
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == leave_pos || alpha[i] == 0.0) continue;
      double* row = &binv_[i * m_];
      const double f = alpha[i];
      for (std::size_t k : pnz_) row[k] -= f * prow[k];
    }
    const double theta = (clamp ? std::max(0.0, x_[leave_pos]) : x_[leave_pos]) / piv;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i != leave_pos) x_[i] -= theta * alpha[i];
    }
    x_[leave_pos] = theta;
    for (std::size_t k : pnz_) y_[k] += d_enter * prow[k];
    where_[head_[leave_pos]] = kNone;
    head_[leave_pos] = enter;
    where_[enter] = leave_pos;
    ++since_refactor_;
  }

  // Ratio test that passes through breakpoints. A basic column that would
  // turn negative is swapped for its complement, which only negates its
  // row of B^-1, for as long as the entering slope stays negative. The
  // swaps are applied here and d_enter is updated to the new slope.
  std::size_t long_step(Phase phase, std::vector<double>& alpha, double& d_enter) {
    cand_.clear();
    for (std::size_t i = 0; i < m_; ++i) {
      if (alpha[i] > opt_.pivot_tol) cand_.push_back({std::max(0.0, x_[i]) / alpha[i], i});
    }
    std::sort(cand_.begin(), cand_.end(), [&](const auto& a, const auto& b) {
      return a.first < b.first || (a.first == b.first && alpha[a.second] > alpha[b.second]);
    });
    double slope = d_enter;
    std::size_t stop = cand_.size();
    flips_.clear();
    for (std::size_t c = 0; c < cand_.size(); ++c) {
      const std::size_t i = cand_[c].second;
      const std::size_t jc = complement_[head_[i]];
      if (jc != kNone && allowed_[jc] && where_[jc] == kNone) {
        const double gain = (cost(head_[i], phase) + cost(jc, phase)) * alpha[i];
        if (gain > 0.0 && slope + gain < -opt_.optimality_tol) {
          slope += gain;
          flips_.push_back(i);
          continue;
        }
      }
      stop = c;
      break;
    }
    if (stop == cand_.size()) return kNone;
    // Harris-style choice among the rows blocking at about the same step.
    std::size_t leave = cand_[stop].second;
    double bound = std::numeric_limits<double>::infinity();
    for (std::size_t c = stop; c < cand_.size(); ++c) {
      const std::size_t i = cand_[c].second;
      bound = std::min(bound, (std::max(0.0, x_[i]) + opt_.feasibility_tol) / alpha[i]);
      if (cand_[c].first > bound) break;
    }
    for (std::size_t c = stop; c < cand_.size() && cand_[c].first <= bound; ++c) {
      if (alpha[cand_[c].second] > alpha[leave]) leave = cand_[c].second;
    }
    for (std::size_t i : flips_) {
      const std::size_t j = head_[i];
      const std::size_t jc = complement_[j];
      const double w = cost(j, phase) + cost(jc, phase);
      double* row = &binv_[i * m_];
      for (std::size_t k = 0; k < m_; ++k) {
        if (row[k] != 0.0) {
          y_[k] -= w * row[k];
          row[k] = -row[k];
        }
      }
      d_enter += w * alpha[i];
      alpha[i] = -alpha[i];
      x_[i] = -x_[i];
      where_[j] = kNone;
      head_[i] = jc;
      where_[jc] = i;
    }
    return leave;
  }

  // Lifts every non-artificial basic value by a small deterministic amount.
  // This moves b to b + B delta and breaks the ties that stall degenerate
  // vertices.
  void perturb() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (is_artificial(head_[i])) continue;
      const double jitter = static_cast<double>((i * 2654435761u) % 1024) / 1024.0;
      const double delta = opt_.perturbation * (1.0 + jitter) * (1.0 + std::abs(x_[i]));
      x_[i] += delta;
      for (const auto& e : cols_[head_[i]]) b_[e.row] += e.value * delta;
    }
    perturbed_ = true;
  }

  // Restores the true b. Reduced costs do not depend on b, so any primal
  // infeasibility left behind is repaired with dual simplex pivots.
  LpStatus remove_perturbation(Phase phase) {
    b_ = b_orig_;
    perturbed_ = false;
    if (!refactor()) return LpStatus::numeric_failure;
    compute_duals(phase);
    std::vector<double> alpha;
    while (true) {
      if (iterations_ >= max_iter_) return LpStatus::numeric_failure;
      if (since_refactor_ >= opt_.refactor_interval) {
        if (!refactor()) return LpStatus::numeric_failure;
        compute_duals(phase);
      }
      std::size_t leave = kNone;
      double worst = -opt_.feasibility_tol;
      for (std::size_t i = 0; i < m_; ++i) {
        if (x_[i] < worst) {
          worst = x_[i];
          leave = i;
        }
      }
      if (leave == kNone) return LpStatus::optimal;
      const double* row = &binv_[leave * m_];
      std::size_t enter = kNone;
      double best_ratio = std::numeric_limits<double>::infinity();
      double best_alpha = 0.0;
      for (std::size_t j = 0; j < nv_; ++j) {
        if (!allowed_[j] || where_[j] != kNone) continue;
        double a = 0.0;
        for (const auto& e : cols_[j]) a += row[e.row] * e.value;
        if (a >= -opt_.pivot_tol) continue;
        const double ratio = std::max(0.0, reduced_cost(j, phase)) / -a;
        if (ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && -a > best_alpha)) {
          best_ratio = std::min(best_ratio, ratio);
          best_alpha = -a;
          enter = j;
        }
      }
      // The unperturbed problem is feasible, so a dead end is numerical.
      if (enter == kNone) return LpStatus::numeric_failure;
      ftran(enter, alpha);
      if (is_artificial(head_[leave])) allowed_[head_[leave]] = false;
      pivot(leave, enter, alpha, reduced_cost(enter, phase), false);
      ++iterations_;
    }
  }

  LpStatus iterate(Phase phase) {
    compute_duals(phase);
    std::size_t degenerate_run = 0;
    bool bland = false;
    bool perturb_used = false;
    std::size_t confirmations = 0;
    std::vector<double> alpha;
    while (true) {
      if (iterations_ >= max_iter_) return LpStatus::numeric_failure;
      if (since_refactor_ >= opt_.refactor_interval) {
        if (!refactor()) return LpStatus::numeric_failure;
        compute_duals(phase);
      }
      // Pricing.
      std::size_t enter = kNone;
      double best_d = -opt_.optimality_tol;
      for (std::size_t j = 0; j < nv_; ++j) {
        if (!allowed_[j] || where_[j] != kNone) continue;
        const double d = reduced_cost(j, phase);
        if (bland) {
          if (d < -opt_.optimality_tol) {
            enter = j;
            best_d = d;
            break;
          }
        } else if (d < best_d) {
          best_d = d;
          enter = j;
        }
      }
      if (enter == kNone) {
        // Confirm optimality on a fresh factorization.
        if (since_refactor_ > 0 && confirmations <= 2) {
          ++confirmations;
          if (!refactor()) return LpStatus::numeric_failure;
          compute_duals(phase);
          continue;
        }
        if (perturbed_) {
          const auto status = remove_perturbation(phase);
          if (status != LpStatus::optimal) return status;
          confirmations = 0;
          continue;
        }
        break;
      }

      ftran(enter, alpha);
      std::size_t leave = kNone;
      if (bland) {
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m_; ++i) {
          if (alpha[i] <= opt_.pivot_tol) continue;
          const double ratio = std::max(0.0, x_[i]) / alpha[i];
          if (ratio < best_ratio - 1e-15 ||
              (ratio <= best_ratio + 1e-15 && leave != kNone && head_[i] < head_[leave])) {
            if (ratio < best_ratio) best_ratio = ratio;
            leave = i;
          }
        }
      } else if (has_complements_) {
        leave = long_step(phase, alpha, best_d);
      } else {
        // Harris: widen the ratio bound by the feasibility tolerance, then
        // take the largest pivot inside it.
        double bound = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m_; ++i) {
          if (alpha[i] <= opt_.pivot_tol) continue;
          bound = std::min(bound, (std::max(0.0, x_[i]) + opt_.feasibility_tol) / alpha[i]);
        }
        double best_alpha = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
          if (alpha[i] <= opt_.pivot_tol) continue;
          if (std::max(0.0, x_[i]) / alpha[i] <= bound && alpha[i] > best_alpha) {
            best_alpha = alpha[i];
            leave = i;
          }
        }
      }
      if (leave == kNone) return LpStatus::unbounded;

      const double step = std::max(0.0, x_[leave]) / alpha[leave];
      const bool degenerate = step * std::abs(best_d) < 1e-14;
      if (is_artificial(head_[leave])) allowed_[head_[leave]] = false;
      pivot(leave, enter, alpha, best_d);
      ++iterations_;
      confirmations = 0;
      if (degenerate) {
        // First remedy is a perturbation, the second Bland's rule.
        if (++degenerate_run >= opt_.degenerate_switch) {
          degenerate_run = 0;
          if (!perturb_used) {
            perturb();
            perturb_used = true;
          } else {
            bland = true;
          }
        }
      } else {
        degenerate_run = 0;
        bland = false;
      }
    }
    return LpStatus::optimal;
  }

  // After phase one, swap zero-level artificials for real columns where the
  // row allows it; what remains marks a redundant row.
  void drive_out_artificials() {
    std::vector<double> alpha;
    for (std::size_t i = 0; i < m_; ++i) {
      if (!is_artificial(head_[i])) continue;
      const double* row = &binv_[i * m_];
      for (std::size_t j = 0; j < ns_ + m_; ++j) {
        if (!exists_[j] || where_[j] != kNone) continue;
        double v = 0.0;
        for (const auto& e : cols_[j]) v += row[e.row] * e.value;
        if (std::abs(v) > 1e-7) {
          ftran(j, alpha);
          allowed_[head_[i]] = false;
          pivot(i, j, alpha, 0.0);
          x_[i] = std::max(0.0, x_[i]);
          break;
        }
      }
    }
    refactor();
  }

  LpSolution& finish(LpSolution& sol, LpStatus status) {
    sol.status = status;
    sol.iterations = iterations_;
    if (status != LpStatus::optimal) return sol;
    if (since_refactor_ > 0 && !refactor()) {
      sol.status = LpStatus::numeric_failure;
      return sol;
    }
    for (std::size_t i = 0; i < m_; ++i) {
      if (x_[i] < -opt_.feasibility_tol ||
          (is_artificial(head_[i]) && x_[i] > opt_.feasibility_tol)) {
        sol.status = LpStatus::numeric_failure;
        return sol;
      }
    }
    compute_duals(Phase::two);
    sol.primal.assign(ns_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      if (head_[i] < ns_) sol.primal[head_[i]] = std::max(0.0, x_[i]);
    }
    sol.row_duals.resize(m_);
    for (std::size_t r = 0; r < m_; ++r) sol.row_duals[r] = sigma_[r] * y_[r];
    sol.objective = 0.0;
    for (std::size_t j = 0; j < ns_; ++j) sol.objective += model_.cost(j) * sol.primal[j];
    sol.dual_objective = 0.0;
    for (std::size_t r = 0; r < m_; ++r) sol.dual_objective += model_.rhs(r) * sol.row_duals[r];
    sol.basis.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t j = head_[i];
      if (j < ns_) {
        sol.basis[i] = {BasisEntry::Kind::structural, j};
      } else if (j < ns_ + m_) {
        sol.basis[i] = {BasisEntry::Kind::slack, j - ns_};
      } else {
        sol.basis[i] = {BasisEntry::Kind::artificial, j - ns_ - m_};
      }
    }
    return sol;
  }

  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  const LpModel& model_;
  SimplexOptions opt_;
  std::size_t m_ = 0, ns_ = 0, nv_ = 0;
  std::vector<double> sigma_, b_, b_orig_;
  bool perturbed_ = false;
  std::vector<std::vector<SparseEntry>> cols_;
  std::vector<bool> exists_, allowed_;
  std::vector<std::size_t> head_, where_;
  std::vector<double> binv_, x_, y_;
  std::vector<std::size_t> pnz_, complement_, flips_;
  std::vector<std::pair<double, std::size_t>> cand_;
  bool has_complements_ = false;
  std::size_t since_refactor_ = 0;
  std::size_t iterations_ = 0;
  std::size_t max_iter_ = 0;
};

}  // namespace

LpSolution solve_simplex(const LpModel& model, const SimplexOptions& options, const LpBasis* warm) {
  if (model.row_count() == 0) throw std::invalid_argument("LP has no rows");
  Engine engine(model, options);
  return engine.solve(warm);
}

}  // namespace rumfit
