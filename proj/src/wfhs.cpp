#include "rumfit/wfhs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "rumfit/random.hpp"

namespace rumfit {
namespace {

double cost_with_positions(const WfhsInstance& inst, std::span<const std::uint32_t> pos) {
  double total = 0.0;
  for (const auto& e : inst.edges()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < e.vertices.size(); ++i) {
      if (pos[e.vertices[i]] < pos[e.vertices[best]]) best = i;
    }
    total += e.weights[best];
  }
  return total;
}

struct Incidence {
  std::uint32_t edge;
  std::uint32_t local;  // index of the vertex inside the edge
};

std::vector<std::vector<Incidence>> build_incidence(const WfhsInstance& inst) {
  std::vector<std::vector<Incidence>> inc(inst.vertex_count());
  const auto& edges = inst.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    for (std::size_t i = 0; i < edges[e].vertices.size(); ++i) {
      inc[edges[e].vertices[i]].push_back({static_cast<std::uint32_t>(e),
                                           static_cast<std::uint32_t>(i)});
    }
  }
  return inc;
}

// Steepest descent over insertion moves (take the element at position i and
// reinsert it so it ends at position j != i).
//
// Only edges containing the moved element x can change winner: the relative
// order of every other pair is preserved. For such an edge let y be the best
// ranked other member and q its position once x is removed. Reinserting x at
// j makes x the winner iff j <= q, so all n targets of x are priced with one
// bucket pass in O(deg(x) * k + n).
class Descent {
 public:
  explicit Descent(const WfhsInstance& inst)
      : inst_(inst), incidence_(build_incidence(inst)) {}

  Permutation run(Permutation start, std::vector<double>* trace) const {
    const std::size_t n = inst_.vertex_count();
    std::vector<ItemId> order(start.order().begin(), start.order().end());
    std::vector<std::uint32_t> pos(n);
    for (std::size_t p = 0; p < n; ++p) pos[order[p]] = static_cast<std::uint32_t>(p);
    double cost = cost_with_positions(inst_, pos);
    if (trace) trace->push_back(cost);

    std::vector<double> bucket(n), value(n);
    const auto& edges = inst_.edges();
    while (n > 1) {
      double best_delta = 0.0;
      std::size_t best_i = 0, best_j = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const ItemId x = order[i];
        std::fill(bucket.begin(), bucket.end(), 0.0);
        double base = 0.0;
        for (const auto& inc : incidence_[x]) {
          const auto& e = edges[inc.edge];
          std::uint32_t y_pos = std::numeric_limits<std::uint32_t>::max();
          std::size_t y_local = 0;
          for (std::size_t m = 0; m < e.vertices.size(); ++m) {
            if (m == inc.local) continue;
            if (pos[e.vertices[m]] < y_pos) {
              y_pos = pos[e.vertices[m]];
              y_local = m;
            }
          }
          const std::size_t q = y_pos > i ? y_pos - 1 : y_pos;
          base += e.weights[y_local];
          bucket[q] += e.weights[inc.local] - e.weights[y_local];
        }
        double acc = 0.0;
        for (std::size_t j = n; j-- > 0;) {
          acc += bucket[j];
          value[j] = base + acc;
        }
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          const double delta = value[j] - value[i];
          if (delta < best_delta) {
            best_delta = delta;
            best_i = i;
            best_j = j;
          }
        }
      }
      if (!(best_delta < -kLocalSearchImproveTol)) break;

      std::vector<ItemId> next = order;
      const ItemId moved = next[best_i];
      next.erase(next.begin() + static_cast<std::ptrdiff_t>(best_i));
      next.insert(next.begin() + static_cast<std::ptrdiff_t>(best_j), moved);
      std::vector<std::uint32_t> next_pos(n);
      for (std::size_t p = 0; p < n; ++p) next_pos[next[p]] = static_cast<std::uint32_t>(p);
      const double next_cost = cost_with_positions(inst_, next_pos);
      // The incremental delta and the recomputed sum use different summation
      // orders; the recomputed value decides.
      if (!(next_cost < cost)) break;
      order = std::move(next);
      pos = std::move(next_pos);
      cost = next_cost;
      if (trace) trace->push_back(cost);
    }
    return Permutation(std::move(order));
  }

 private:
  const WfhsInstance& inst_;
  std::vector<std::vector<Incidence>> incidence_;
};

}  // namespace

WfhsInstance::WfhsInstance(std::size_t n, std::size_t k, double tau, std::vector<Hyperedge> edges)
    : WfhsInstance(n, k, tau, std::move(edges), false) {}

WfhsInstance WfhsInstance::with_signed_weights(std::size_t n, std::size_t k, double tau,
                                               std::vector<Hyperedge> edges) {
  return WfhsInstance(n, k, tau, std::move(edges), true);
}

WfhsInstance::WfhsInstance(std::size_t n, std::size_t k, double tau, std::vector<Hyperedge> edges,
                           bool signed_weights)
    : n_(n), k_(k), tau_(tau), signed_(signed_weights), edges_(std::move(edges)) {
  if (n == 0) throw std::invalid_argument("WFHS instance needs at least one vertex");
  if (k < 2 || k > n) throw std::invalid_argument("WFHS edge size must be in [2, n]");
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw std::invalid_argument("WFHS tau must be >= 0");
  for (auto& e : edges_) {
    if (e.vertices.size() != k || e.weights.size() != k) {
      throw std::invalid_argument("WFHS edge must list exactly k vertices and weights");
    }
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return e.vertices[a] < e.vertices[b]; });
    Hyperedge sorted;
    for (auto i : idx) {
      sorted.vertices.push_back(e.vertices[i]);
      sorted.weights.push_back(e.weights[i]);
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (sorted.vertices[i] >= n) throw std::invalid_argument("WFHS vertex outside [0, n)");
      if (i > 0 && sorted.vertices[i] == sorted.vertices[i - 1]) {
        throw std::invalid_argument("WFHS edge repeats a vertex");
      }
      const double w = sorted.weights[i];
      const double lo = signed_ ? -tau : 0.0;
      if (!(w >= lo && w <= tau)) {
        throw std::invalid_argument("WFHS weight " + format_double(w) + " outside [" +
                                    format_double(lo) + ", " + format_double(tau) + "]");
      }
    }
    e = std::move(sorted);
  }
}

std::string to_string(WfhsMethod m) {
  switch (m) {
    case WfhsMethod::exact: return "exact";
    case WfhsMethod::local_search: return "local";
    case WfhsMethod::brute_force: return "brute";
  }
  return "?";
}

double wfhs_cost(const WfhsInstance& inst, const Permutation& pi) {
  if (pi.size() != inst.vertex_count()) {
    throw std::invalid_argument("permutation size differs from WFHS vertex count");
  }
  double total = 0.0;
  for (const auto& e : inst.edges()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < e.vertices.size(); ++i) {
      if (pi.rank_of(e.vertices[i]) < pi.rank_of(e.vertices[best])) best = i;
    }
    total += e.weights[best];
  }
  return total;
}

WfhsResult wfhs_brute_force(const WfhsInstance& inst) {
  const std::size_t n = inst.vertex_count();
  if (n > kBruteForceLimit) {
    throw CapacityError("brute force refuses n=" + std::to_string(n) + " (limit " +
                        std::to_string(kBruteForceLimit) + ")");
  }
  std::vector<ItemId> order(n);
  std::iota(order.begin(), order.end(), ItemId{0});
  std::vector<std::uint32_t> pos(n);
  std::vector<ItemId> best_order = order;
  double best = std::numeric_limits<double>::infinity();
  do {
    for (std::size_t p = 0; p < n; ++p) pos[order[p]] = static_cast<std::uint32_t>(p);
    const double c = cost_with_positions(inst, pos);
    if (c < best) {
      best = c;
      best_order = order;
    }
  } while (std::next_permutation(order.begin(), order.end()));
  WfhsResult r;
  r.permutation = Permutation(std::move(best_order));
  r.cost = wfhs_cost(inst, r.permutation);
  r.method = WfhsMethod::brute_force;
  return r;
}

WfhsResult wfhs_exact(const WfhsInstance& inst, std::size_t max_vertices, double* dp_value) {
  const std::size_t n = inst.vertex_count();
  const std::size_t limit = std::min(max_vertices, kHardExactLimit);
  if (n > limit) {
    throw CapacityError("exact WFHS needs 2^" + std::to_string(n) + " states; limit is n <= " +
                        std::to_string(limit));
  }
  const std::size_t states = std::size_t{1} << n;
  std::vector<std::uint64_t> edge_mask;
  edge_mask.reserve(inst.edges().size());
  for (const auto& e : inst.edges()) {
    std::uint64_t m = 0;
    for (auto v : e.vertices) m |= std::uint64_t{1} << v;
    edge_mask.push_back(m);
  }
  std::vector<double> best(states);
  std::vector<std::uint8_t> first(states, 0);
  std::vector<double> t(n, 0.0);
  best[0] = 0.0;
  const auto& edges = inst.edges();
  // Every proper subset of A is numerically smaller than A, so increasing
  // order visits sets after all of their subsets.
  for (std::size_t a_set = 1; a_set < states; ++a_set) {
    for (std::size_t a = 0; a < n; ++a) {
      if (a_set >> a & 1) t[a] = 0.0;
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if ((edge_mask[e] & ~static_cast<std::uint64_t>(a_set)) != 0) continue;
      for (std::size_t i = 0; i < edges[e].vertices.size(); ++i) {
        t[edges[e].vertices[i]] += edges[e].weights[i];
      }
    }
    double c = std::numeric_limits<double>::infinity();
    std::uint8_t arg = 0;
    for (std::size_t a = 0; a < n; ++a) {
      if (!(a_set >> a & 1)) continue;
      const double v = t[a] + best[a_set ^ (std::size_t{1} << a)];
      if (v < c) {
        c = v;
        arg = static_cast<std::uint8_t>(a);
      }
    }
    best[a_set] = c;
    first[a_set] = arg;
  }
  // first[A] is the highest ranked element of the block A: it wins every
  // edge inside A that contains it. Peel blocks from the top of the order.
  std::vector<ItemId> order;
  order.reserve(n);
  std::size_t a_set = states - 1;
  while (a_set != 0) {
    const auto a = first[a_set];
    order.push_back(a);
    a_set ^= std::size_t{1} << a;
  }
  if (dp_value) *dp_value = best[states - 1];
  WfhsResult r;
  r.permutation = Permutation(std::move(order));
  r.cost = wfhs_cost(inst, r.permutation);
  r.method = WfhsMethod::exact;
  return r;
}

Permutation wfhs_descend(const WfhsInstance& inst, Permutation start, std::vector<double>* trace) {
  if (start.size() != inst.vertex_count()) {
    throw std::invalid_argument("start permutation size differs from WFHS vertex count");
  }
  return Descent(inst).run(std::move(start), trace);
}

LocalSearchOutcome wfhs_local_search_run(const WfhsInstance& inst, const LocalSearchOptions& opt) {
  if (opt.min_restarts <= 0 || opt.min_restarts > opt.restarts) {
    throw std::invalid_argument("local search needs 0 < t' <= t");
  }
  const std::size_t n = inst.vertex_count();
  const Descent descent(inst);
  const auto total = static_cast<std::size_t>(opt.restarts);
  const std::size_t batch = std::max<std::size_t>(1, opt.threads);

  LocalSearchOutcome out;
  out.best_cost = std::numeric_limits<double>::infinity();
  std::optional<WfhsResult> best;

  for (std::size_t begin = 0; begin < total; begin += batch) {
    const std::size_t end = std::min(total, begin + batch);
    std::vector<Permutation> found(end - begin);
    std::vector<double> costs(end - begin);
    std::vector<std::vector<double>> traces(end - begin);
    parallel_for(end - begin, opt.threads, [&](std::size_t slot) {
      Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(begin + slot)));
      std::vector<ItemId> order(n);
      std::iota(order.begin(), order.end(), ItemId{0});
      shuffle_in_place(order, rng);
      found[slot] = descent.run(Permutation(std::move(order)),
                                opt.record_traces ? &traces[slot] : nullptr);
      costs[slot] = wfhs_cost(inst, found[slot]);
    });
    // Sequential scan keeps the stopping rule identical to a serial run.
    for (std::size_t slot = 0; slot < end - begin; ++slot) {
      const std::size_t restart = begin + slot + 1;
      if (opt.record_traces) out.traces.push_back(std::move(traces[slot]));
      if (costs[slot] < out.best_cost) {
        out.best_cost = costs[slot];
        best = WfhsResult{found[slot], costs[slot], WfhsMethod::local_search, 0};
      }
      out.restarts_used = restart;
      if (out.best_cost < opt.threshold && restart >= static_cast<std::size_t>(opt.min_restarts)) {
        best->restarts_used = restart;
        out.result = std::move(best);
        return out;
      }
    }
  }
  return out;
}

std::optional<WfhsResult> wfhs_local_search(const WfhsInstance& inst, double threshold, int t,
                                            int t_prime, std::uint64_t seed) {
  LocalSearchOptions opt;
  opt.threshold = threshold;
  opt.restarts = t;
  opt.min_restarts = t_prime;
  opt.seed = seed;
  return wfhs_local_search_run(inst, opt).result;
}

void write_wfhs_instance(std::ostream& out, const WfhsInstance& inst) {
  out << "wfhs n=" << inst.vertex_count() << " k=" << inst.edge_size()
      << " tau=" << format_double(inst.tau()) << '\n';
  for (const auto& e : inst.edges()) {
    for (std::size_t i = 0; i < e.vertices.size(); ++i) out << (i ? "," : "") << e.vertices[i];
    out << " : ";
    for (std::size_t i = 0; i < e.weights.size(); ++i) {
      out << (i ? "," : "") << format_double(e.weights[i]);
    }
    out << '\n';
  }
}

WfhsInstance read_wfhs_instance(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t n = 0, k = 0;
  double tau = 0.0;
  bool any_negative = false;
  std::vector<Hyperedge> edges;
  auto fail = [&](const std::string& what) {
    throw InputError("wfhs line " + std::to_string(line_no) + ": " + what);
  };
  auto parse_double = [&](std::string tok) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      fail("bad number '" + tok + "'");
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    if (!have_header) {
      std::istringstream hs(line);
      std::string magic, nf, kf, tf;
      hs >> magic >> nf >> kf >> tf;
      if (magic != "wfhs" || nf.rfind("n=", 0) != 0 || kf.rfind("k=", 0) != 0 ||
          tf.rfind("tau=", 0) != 0) {
        fail("expected header 'wfhs n=<n> k=<k> tau=<tau>'");
      }
      try {
        n = std::stoul(nf.substr(2));
        k = std::stoul(kf.substr(2));
      } catch (const std::exception&) {
        fail("bad n or k");
      }
      tau = parse_double(tf.substr(4));
      have_header = true;
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) fail("expected 'v1,...,vk : w1,...,wk'");
    Hyperedge e;
    std::stringstream vs(line.substr(0, colon));
    std::string tok;
    while (std::getline(vs, tok, ',')) {
      const double v = parse_double(tok);
      if (v < 0 || v != std::floor(v)) fail("bad vertex '" + tok + "'");
      e.vertices.push_back(static_cast<ItemId>(v));
    }
    std::stringstream ws(line.substr(colon + 1));
    while (std::getline(ws, tok, ',')) {
      e.weights.push_back(parse_double(tok));
      if (e.weights.back() < 0) any_negative = true;
    }
    if (e.vertices.size() != k || e.weights.size() != k) fail("edge must have k vertices and weights");
    edges.push_back(std::move(e));
  }
  if (!have_header) throw InputError("wfhs file: missing header");
  try {
    return any_negative ? WfhsInstance::with_signed_weights(n, k, tau, std::move(edges))
                        : WfhsInstance(n, k, tau, std::move(edges));
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("wfhs file: ") + e.what());
  }
}

}  // namespace rumfit
