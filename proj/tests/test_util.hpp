// Random instance generators shared by the test binaries.

#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "rumfit/ingest.hpp"
#include "rumfit/model.hpp"
#include "rumfit/random.hpp"
#include "rumfit/wfhs.hpp"

namespace testutil {

using namespace rumfit;

inline Permutation random_permutation(std::size_t n, Rng& rng) {
  std::vector<ItemId> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<ItemId>(i);
  shuffle_in_place(order, rng);
  return Permutation(std::move(order));
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// `m` distinct permutations (fewer if n! < m) with random weights.
inline Rum random_rum(std::size_t n, std::size_t m, Rng& rng) {
  std::size_t fact = 1;
  for (std::size_t i = 2; i <= n && fact < m; ++i) fact *= i;
  m = std::min(m, fact);
  std::set<Permutation> seen;
  std::vector<RumComponent> comps;
  double total = 0;
  while (comps.size() < m) {
    auto p = random_permutation(n, rng);
    if (!seen.insert(p).second) continue;
    const double w = 0.05 + uniform01(rng);
    comps.push_back({p, w});
    total += w;
  }
  for (auto& c : comps) c.probability /= total;
  return Rum(std::move(comps));
}

inline std::vector<Slate> random_slates(std::size_t n, std::size_t k, std::size_t count, Rng& rng) {
  auto all = all_slates(n, k);
  shuffle_in_place(all, rng);
  all.resize(std::min(count, all.size()));
  return all;
}

inline std::vector<double> random_simplex(std::size_t k, Rng& rng) {
  std::vector<double> p(k);
  double s = 0;
  for (auto& x : p) {
    x = 0.01 + uniform01(rng);
    s += x;
  }
  for (auto& x : p) x /= s;
  return p;
}

inline WinnerTable random_table(std::size_t n, std::size_t k, std::size_t slates, Rng& rng) {
  std::vector<SlateDistribution> entries;
  for (const auto& s : random_slates(n, k, slates, rng)) {
    entries.push_back({s, random_simplex(k, rng)});
  }
  return WinnerTable(n, std::move(entries));
}

// Exact winner distributions of `r` on every k-slate.
inline WinnerTable table_from_rum(const Rum& r, std::size_t k) {
  std::vector<SlateDistribution> entries;
  for (const auto& s : all_slates(r.universe_size(), k)) {
    entries.push_back({s, rum_winner_distribution(r, s)});
  }
  return WinnerTable(r.universe_size(), std::move(entries));
}

// Mixes the table with noise so it is (generically) not a RUM table.
inline WinnerTable perturb_table(const WinnerTable& t, double amount, Rng& rng) {
  std::vector<SlateDistribution> entries;
  for (const auto& e : t.entries()) {
    const auto noise = random_simplex(e.probabilities.size(), rng);
    std::vector<double> p(e.probabilities.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = (1 - amount) * e.probabilities[i] + amount * noise[i];
    }
    entries.push_back({e.slate, p});
  }
  return WinnerTable(t.universe_size(), std::move(entries));
}

inline WfhsInstance random_wfhs(std::size_t n, std::size_t k, std::size_t edges, Rng& rng) {
  std::vector<Hyperedge> es;
  for (const auto& s : random_slates(n, k, edges, rng)) {
    Hyperedge e;
    e.vertices.assign(s.items().begin(), s.items().end());
    for (std::size_t i = 0; i < k; ++i) e.weights.push_back(uniform01(rng));
    es.push_back(std::move(e));
  }
  return WfhsInstance(n, k, 1.0, std::move(es));
}

// Cost of every single-element insertion neighbour is >= cost(pi) - tol.
inline bool is_insertion_local_optimum(const WfhsInstance& inst, const Permutation& pi, double tol) {
  const double base = wfhs_cost(inst, pi);
  const std::size_t n = pi.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      std::vector<ItemId> order(pi.order().begin(), pi.order().end());
      const ItemId moved = order[i];
      order.erase(order.begin() + static_cast<long>(i));
      order.insert(order.begin() + static_cast<long>(j), moved);
      if (wfhs_cost(inst, Permutation(order)) < base - tol) return false;
    }
  }
  return true;
}

// Merged, canonically ordered dataset.
inline ChoiceDataset dataset_from(std::size_t n, std::size_t k,
                                  std::vector<ChoiceObservation> obs) {
  return aggregate_observations(n, k, std::move(obs));
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("rumfit_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace testutil
