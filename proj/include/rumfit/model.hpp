// Items, slates, permutations, random utility models and winner tables.
//
// Item ids are dense 0-based indices into a universe [0, n). Permutations
// are stored highest rank first: order()[0] is the most preferred item.

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rumfit {

using ItemId = std::uint32_t;

// Tolerance used to validate that a probability vector sums to one.
inline constexpr double kNormalizationTol = 1e-9;

// Malformed user input (bad file contents, inconsistent arguments coming from
// the outside world). The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A non-empty set of items kept as a sorted, duplicate-free list so it can key
// ordered containers deterministically.
class Slate {
 public:
  Slate() = default;
  // Sorts `items`; throws std::invalid_argument on empty input or duplicates.
  explicit Slate(std::vector<ItemId> items);

  std::span<const ItemId> items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  ItemId operator[](std::size_t pos) const { return items_[pos]; }

  bool contains(ItemId item) const;
  // Position of `item` in items(), or size() when absent.
  std::size_t index_of(ItemId item) const;
  // Largest id + 1; zero for the empty placeholder.
  std::size_t span_end() const { return items_.empty() ? 0 : items_.back() + 1; }

  friend auto operator<=>(const Slate&, const Slate&) = default;
  friend bool operator==(const Slate&, const Slate&) = default;

 private:
  std::vector<ItemId> items_;
};

std::string to_string(const Slate& s);

// A total order over [0, n), highest rank first.
class Permutation {
 public:
  Permutation() = default;
  // Throws std::invalid_argument unless `order` is a bijection on [0, size).
  explicit Permutation(std::vector<ItemId> order);

  static Permutation identity(std::size_t n);

  std::size_t size() const { return order_.size(); }
  std::span<const ItemId> order() const { return order_; }
  ItemId at(std::size_t position) const { return order_[position]; }
  // 0-based position of `item`; smaller means preferred.
  std::size_t rank_of(ItemId item) const { return position_[item]; }

  friend bool operator==(const Permutation& a, const Permutation& b) {
    return a.order_ == b.order_;
  }
  friend auto operator<=>(const Permutation& a, const Permutation& b) {
    return a.order_ <=> b.order_;
  }

 private:
  std::vector<ItemId> order_;
  std::vector<std::uint32_t> position_;
};

// Member of `s` ranked highest by `pi`. Throws std::invalid_argument for an
// empty slate or a slate reaching outside the permutation's universe.
ItemId permutation_winner(const Permutation& pi, const Slate& s);

struct RumComponent {
  Permutation permutation;
  double probability = 0.0;
};

// Finite-support distribution over permutations of [0, n).
class Rum {
 public:
  // Validates: non-empty, same universe, distinct permutations, each
  // probability in [0, 1], total within kNormalizationTol of one.
  explicit Rum(std::vector<RumComponent> support);

  static Rum point_mass(Permutation pi);

  std::size_t universe_size() const { return universe_size_; }
  std::span<const RumComponent> support() const { return support_; }

 private:
  std::size_t universe_size_ = 0;
  std::vector<RumComponent> support_;
};

// Empirical (or target) winner distribution of one slate, aligned with the
// slate's sorted items.
struct SlateDistribution {
  Slate slate;
  std::vector<double> probabilities;
};

// Slate -> winner distribution, all slates of one size k, sorted by slate.
class WinnerTable {
 public:
  WinnerTable() = default;
  // Sorts entries by slate and validates: one size k >= 2 for every slate,
  // items < n, no repeated slates, entries in [0, 1] summing to one.
  WinnerTable(std::size_t n, std::vector<SlateDistribution> entries);

  std::size_t universe_size() const { return n_; }
  std::size_t slate_size() const { return k_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::span<const SlateDistribution> entries() const { return entries_; }
  const SlateDistribution& operator[](std::size_t i) const { return entries_[i]; }

  // Index of `s` in entries(), or size() when absent.
  std::size_t find(const Slate& s) const;
  // Total number of (slate, item) pairs.
  std::size_t pair_count() const { return size() * k_; }

 private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::vector<SlateDistribution> entries_;
};

// Winner distribution R_S induced by `r`, aligned with s.items().
std::vector<double> rum_winner_distribution(const Rum& r, const Slate& s);

// Sum of absolute differences; throws std::invalid_argument on length mismatch.
double l1_distance(std::span<const double> p, std::span<const double> q);

// Per-slate l1 errors |R_S - D_S|_1 in table order.
std::vector<double> slate_errors(const Rum& r, const WinnerTable& table);

// Mean over slates of the l1 error; throws std::invalid_argument when the
// table is empty.
double average_l1_error(const Rum& r, const WinnerTable& table);

// Text format: header `rum v1 n=<n>`, then one `probability<TAB>items...`
// line per support element, items highest rank first.
void write_rum(std::ostream& out, const Rum& r);
Rum read_rum(std::istream& in);

// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

}  // namespace rumfit
