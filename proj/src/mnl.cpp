#include "rumfit/mnl.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace rumfit {
namespace {

double objective(const MnlModel& m, const ChoiceDataset& ds, double ridge) {
  double value = mnl_log_likelihood(m, ds);
  if (ridge > 0) {
    for (double u : m.utilities) value -= 0.5 * ridge * u * u;
  }
  return value;
}

std::vector<double> gradient(const MnlModel& m, const ChoiceDataset& ds, double ridge) {
  std::vector<double> g(m.utilities.size(), 0.0);
  const double total = static_cast<double>(ds.total_count());
  for (const auto& obs : ds.observations) {
    const auto p = mnl_predict(m, obs.slate);
    const double w = static_cast<double>(obs.count) / total;
    for (std::size_t pos = 0; pos < obs.slate.size(); ++pos) {
      g[obs.slate[pos]] -= w * p[pos];
    }
    g[obs.winner] += w;
  }
  if (ridge > 0) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= ridge * m.utilities[i];
  }
  return g;
}

void normalize(MnlModel& m) {
  if (m.utilities.empty()) return;
  const double mean = std::accumulate(m.utilities.begin(), m.utilities.end(), 0.0) /
                      static_cast<double>(m.utilities.size());
  for (double& u : m.utilities) u -= mean;
}

}  // namespace

double mnl_log_likelihood(const MnlModel& m, const ChoiceDataset& ds) {
  double sum = 0.0;
  for (const auto& obs : ds.observations) {
    const auto p = mnl_predict(m, obs.slate);
    sum += static_cast<double>(obs.count) * std::log(p[obs.slate.index_of(obs.winner)]);
  }
  return sum / static_cast<double>(ds.total_count());
}

MnlModel mnl_fit(const ChoiceDataset& ds, const MnlFitOptions& opt,
                 std::vector<double>* ll_trace) {
  if (ds.observations.empty()) throw std::invalid_argument("MNL fit needs observations");
  if (!(opt.step > 0)) throw std::invalid_argument("MNL step must be positive");
  MnlModel m{std::vector<double>(ds.n, 0.0)};
  double value = objective(m, ds, opt.ridge);
  double step = opt.step;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const auto g = gradient(m, ds, opt.ridge);
    double gmax = 0.0, gnorm2 = 0.0;
    for (double x : g) {
      gmax = std::max(gmax, std::abs(x));
      gnorm2 += x * x;
    }
    if (gmax <= opt.gradient_tol) break;
    // Armijo backtracking; the objective is concave so this always ends.
    bool accepted = false;
    while (step > 1e-14) {
      MnlModel trial = m;
      for (std::size_t i = 0; i < g.size(); ++i) trial.utilities[i] += step * g[i];
      const double tv = objective(trial, ds, opt.ridge);
      if (tv >= value + 1e-4 * step * gnorm2) {
        m = std::move(trial);
        value = tv;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    if (ll_trace) ll_trace->push_back(value);
    step = std::min(step * 2.0, 64.0 * opt.step);
  }
  normalize(m);
  return m;
}

std::vector<double> mnl_predict(const MnlModel& m, const Slate& s) {
  double top = -std::numeric_limits<double>::infinity();
  for (ItemId i : s.items()) {
    if (i >= m.utilities.size()) throw std::invalid_argument("slate item outside MNL universe");
    top = std::max(top, m.utilities[i]);
  }
  std::vector<double> p;
  p.reserve(s.size());
  double z = 0.0;
  for (ItemId i : s.items()) {
    p.push_back(std::exp(m.utilities[i] - top));
    z += p.back();
  }
  for (double& x : p) x /= z;
  return p;
}

WinnerTable mnl_predict_table(const MnlModel& m, std::size_t n, std::span<const Slate> slates) {
  std::vector<SlateDistribution> entries;
  entries.reserve(slates.size());
  for (const auto& s : slates) entries.push_back({s, mnl_predict(m, s)});
  return WinnerTable(n, std::move(entries));
}

void write_mnl(std::ostream& out, const MnlModel& m) {
  out << "mnl v1 n=" << m.utilities.size() << '\n';
  for (double u : m.utilities) out << format_double(u) << '\n';
}

MnlModel read_mnl(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("mnl v1 n=", 0) != 0) {
    throw InputError("mnl line 1: expected header 'mnl v1 n=<n>'");
  }
  std::size_t n = 0;
  try {
    n = std::stoul(line.substr(9));
  } catch (const std::exception&) {
    throw InputError("mnl line 1: bad item count");
  }
  MnlModel m;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      m.utilities.push_back(std::stod(line, &used));
      if (line.find_first_not_of(" \t\r", used) != std::string::npos) throw std::exception();
    } catch (const std::exception&) {
      throw InputError("mnl line " + std::to_string(lineno) + ": bad utility '" + line + "'");
    }
  }
  if (m.utilities.size() != n) {
    throw InputError("mnl: header declares " + std::to_string(n) + " utilities, found " +
                     std::to_string(m.utilities.size()));
  }
  return m;
}

}  // namespace rumfit
