#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "rumfit/wfhs.hpp"
#include "test_util.hpp"

using namespace rumfit;
using testutil::is_insertion_local_optimum;

namespace {

WfhsInstance make(std::size_t n, std::size_t k,
                  std::vector<std::pair<std::vector<ItemId>, std::vector<double>>> edges) {
  std::vector<Hyperedge> es;
  for (auto& [v, w] : edges) es.push_back({v, w});
  return WfhsInstance(n, k, 1.0, std::move(es));
}

}  // namespace

TEST_CASE("cost sums the winner weights") {
  const auto inst = make(3, 2, {{{0, 1}, {0.2, 0.8}}, {{1, 2}, {0.5, 0.1}}});
  CHECK(wfhs_cost(inst, Permutation({0, 1, 2})) == doctest::Approx(0.7));
  CHECK(wfhs_cost(inst, Permutation({2, 1, 0})) == doctest::Approx(0.9));
  CHECK_THROWS_AS(wfhs_cost(inst, Permutation({0, 1})), std::invalid_argument);
}

TEST_CASE("instance validation") {
  CHECK_THROWS_AS(make(3, 2, {{{0, 1}, {0.2, 1.5}}}), std::invalid_argument);
  CHECK_THROWS_AS(make(3, 2, {{{0, 0}, {0.2, 0.1}}}), std::invalid_argument);
  CHECK_THROWS_AS(make(3, 2, {{{0, 3}, {0.2, 0.1}}}), std::invalid_argument);
  CHECK_THROWS_AS(make(3, 2, {{{0, 1, 2}, {0.2, 0.1, 0.1}}}), std::invalid_argument);
  CHECK_THROWS_AS(make(3, 2, {{{0, 1}, {-0.2, 0.1}}}), std::invalid_argument);
  CHECK_NOTHROW(WfhsInstance::with_signed_weights(3, 2, 1.0, {{{0, 1}, {-0.2, 0.1}}}));
  // Vertices are sorted together with their weights.
  const auto inst = make(3, 2, {{{2, 0}, {0.9, 0.1}}});
  CHECK(inst.edges()[0].vertices == std::vector<ItemId>{0, 2});
  CHECK(inst.edges()[0].weights == std::vector<double>{0.1, 0.9});
}

TEST_CASE("frozen brute-force optima") {
  // Values from an independent enumeration over all 120 permutations.
  const auto k2 = make(5, 2,
                       {{{0, 1}, {0.3, 0.7}},
                        {{0, 2}, {0.9, 0.1}},
                        {{1, 2}, {0.4, 0.5}},
                        {{1, 3}, {0.2, 0.8}},
                        {{2, 4}, {0.6, 0.3}},
                        {{3, 4}, {0.5, 0.45}},
                        {{0, 4}, {0.15, 0.85}}});
  CHECK(wfhs_exact(k2).cost == doctest::Approx(2.3).epsilon(1e-12));
  CHECK(wfhs_brute_force(k2).cost == doctest::Approx(2.3).epsilon(1e-12));

  const auto k3 = make(5, 3,
                       {{{0, 1, 2}, {0.3, 0.2, 0.9}},
                        {{1, 2, 3}, {0.5, 0.1, 0.4}},
                        {{0, 3, 4}, {0.7, 0.6, 0.05}},
                        {{2, 3, 4}, {0.2, 0.8, 0.3}}});
  const auto ex = wfhs_exact(k3);
  CHECK(ex.cost == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(wfhs_brute_force(k3).permutation == Permutation({4, 0, 2, 1, 3}));
}

TEST_CASE("property: exact DP matches brute force") {
  for (std::size_t n = 3; n <= 7; ++n) {
    for (std::size_t k = 2; k <= 3; ++k) {
      for (std::uint64_t seed = 0; seed < 25; ++seed) {
        Rng rng(derive_seed(seed, "wfhs-eq-" + std::to_string(n * 10 + k)));
        const auto inst = testutil::random_wfhs(n, k, 2 * n, rng);
        double dp = 0;
        const auto ex = wfhs_exact(inst, kDefaultExactLimit, &dp);
        const auto bf = wfhs_brute_force(inst);
        CHECK(ex.cost == bf.cost);
        CHECK(std::abs(wfhs_cost(inst, ex.permutation) - dp) <= 1e-9);
        CHECK(ex.method == WfhsMethod::exact);
      }
    }
  }
}

TEST_CASE("exact handles signed weights like shifted ones") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto base = testutil::random_wfhs(6, 3, 10, rng);
    std::vector<Hyperedge> shifted;
    for (auto e : base.edges()) {
      for (auto& w : e.weights) w -= 0.5;
      shifted.push_back(e);
    }
    const auto signed_inst = WfhsInstance::with_signed_weights(6, 3, 1.0, shifted);
    // Every permutation pays exactly one weight per edge, so costs shift by |E|/2.
    CHECK(wfhs_exact(signed_inst).cost ==
          doctest::Approx(wfhs_exact(base).cost - 5.0).epsilon(1e-12));
    CHECK(wfhs_brute_force(signed_inst).cost == doctest::Approx(wfhs_exact(signed_inst).cost));
  }
}

TEST_CASE("capacity limits") {
  Rng rng(1);
  const auto inst = testutil::random_wfhs(10, 2, 5, rng);
  CHECK_THROWS_AS(wfhs_brute_force(inst), CapacityError);
  CHECK_THROWS_AS(wfhs_exact(inst, 9), CapacityError);
  CHECK_NOTHROW(wfhs_exact(inst, 10));
}

TEST_CASE("edgeless instance costs nothing") {
  const WfhsInstance inst(4, 2, 1.0, {});
  CHECK(wfhs_exact(inst).cost == 0.0);
  CHECK(wfhs_exact(inst).permutation.size() == 4);
}

TEST_CASE("property: local search is sound") {
  for (std::size_t n = 4; n <= 8; n += 2) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(derive_seed(seed, "ls" + std::to_string(n)));
      const auto inst = testutil::random_wfhs(n, 2 + seed % 2, 3 * n, rng);
      LocalSearchOptions opt;
      opt.threshold = std::numeric_limits<double>::infinity();
      opt.restarts = 20;
      opt.min_restarts = 5;
      opt.seed = seed;
      opt.record_traces = true;
      const auto out = wfhs_local_search_run(inst, opt);
      REQUIRE(out.result.has_value());
      CHECK(out.restarts_used == 5);
      CHECK(out.result->cost >= wfhs_exact(inst).cost - 1e-12);
      CHECK(is_insertion_local_optimum(inst, out.result->permutation, 1e-12));
      for (const auto& tr : out.traces) {
        for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr[i] < tr[i - 1]);
      }
    }
  }
}

TEST_CASE("local search threshold semantics") {
  Rng rng(9);
  const auto inst = testutil::random_wfhs(6, 2, 12, rng);
  const double opt_cost = wfhs_exact(inst).cost;
  // Nothing is strictly below the optimum, so every restart runs.
  LocalSearchOptions opt;
  opt.threshold = opt_cost;
  opt.restarts = 12;
  opt.min_restarts = 3;
  const auto none = wfhs_local_search_run(inst, opt);
  CHECK(!none.result.has_value());
  CHECK(none.restarts_used == 12);
  CHECK(none.best_cost >= opt_cost);
  CHECK_THROWS_AS(wfhs_local_search(inst, 1.0, 3, 4, 0), std::invalid_argument);
  CHECK_THROWS_AS(wfhs_local_search(inst, 1.0, 3, 0, 0), std::invalid_argument);
}

TEST_CASE("local search is deterministic and thread independent") {
  Rng rng(4);
  const auto inst = testutil::random_wfhs(8, 3, 20, rng);
  LocalSearchOptions opt;
  opt.threshold = std::numeric_limits<double>::infinity();
  opt.seed = 77;
  const auto a = wfhs_local_search_run(inst, opt);
  opt.threads = 3;
  const auto b = wfhs_local_search_run(inst, opt);
  REQUIRE(a.result);
  REQUIRE(b.result);
  CHECK(a.result->permutation == b.result->permutation);
  CHECK(a.restarts_used == b.restarts_used);
}

TEST_CASE("descent from a local optimum stays put") {
  Rng rng(2);
  const auto inst = testutil::random_wfhs(7, 2, 15, rng);
  const auto p = wfhs_descend(inst, testutil::random_permutation(7, rng));
  std::vector<double> trace;
  CHECK(wfhs_descend(inst, p, &trace) == p);
  CHECK(trace.size() == 1);
}

TEST_CASE("instance file round trip") {
  Rng rng(5);
  const auto inst = testutil::random_wfhs(5, 3, 6, rng);
  std::stringstream ss;
  write_wfhs_instance(ss, inst);
  const auto back = read_wfhs_instance(ss);
  CHECK(back.vertex_count() == 5);
  REQUIRE(back.edges().size() == inst.edges().size());
  for (std::size_t e = 0; e < inst.edges().size(); ++e) {
    CHECK(back.edges()[e].weights == inst.edges()[e].weights);
  }
  std::istringstream neg("wfhs n=3 k=2 tau=1\n0,1 : -0.5,0.25\n");
  CHECK(read_wfhs_instance(neg).signed_weights());
  std::istringstream bad("wfhs n=3 k=2 tau=1\n0,1 : 0.5,zz\n");
  CHECK_THROWS_AS(read_wfhs_instance(bad), InputError);
}
