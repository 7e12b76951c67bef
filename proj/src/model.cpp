#include "rumfit/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace rumfit {

Slate::Slate(std::vector<ItemId> items) : items_(std::move(items)) {
  if (items_.empty()) throw std::invalid_argument("slate must be non-empty");
  std::sort(items_.begin(), items_.end());
  if (std::adjacent_find(items_.begin(), items_.end()) != items_.end()) {
    throw std::invalid_argument("slate has duplicate items");
  }
}

bool Slate::contains(ItemId item) const {
  return std::binary_search(items_.begin(), items_.end(), item);
}

std::size_t Slate::index_of(ItemId item) const {
  auto it = std::lower_bound(items_.begin(), items_.end(), item);
  if (it == items_.end() || *it != item) return items_.size();
  return static_cast<std::size_t>(it - items_.begin());
}

std::string to_string(const Slate& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(s[i]);
  }
  return out + "}";
}

Permutation::Permutation(std::vector<ItemId> order) : order_(std::move(order)) {
  const std::size_t n = order_.size();
  constexpr auto kUnset = static_cast<std::uint32_t>(-1);
  position_.assign(n, kUnset);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const ItemId item = order_[pos];
    if (item >= n) {
      throw std::invalid_argument("permutation item " + std::to_string(item) +
                                  " outside [0, " + std::to_string(n) + ")");
    }
    if (position_[item] != kUnset) {
      throw std::invalid_argument("permutation repeats item " + std::to_string(item));
    }
    position_[item] = static_cast<std::uint32_t>(pos);
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<ItemId> order(n);
  std::iota(order.begin(), order.end(), ItemId{0});
  return Permutation(std::move(order));
}

ItemId permutation_winner(const Permutation& pi, const Slate& s) {
  if (s.empty()) throw std::invalid_argument("winner of an empty slate");
  if (s.span_end() > pi.size()) {
    throw std::invalid_argument("slate " + to_string(s) + " outside permutation universe");
  }
  ItemId best = s[0];
  for (ItemId item : s.items()) {
    if (pi.rank_of(item) < pi.rank_of(best)) best = item;
  }
  return best;
}

Rum::Rum(std::vector<RumComponent> support) : support_(std::move(support)) {
  if (support_.empty()) throw std::invalid_argument("RUM support is empty");
  universe_size_ = support_.front().permutation.size();
  double total = 0.0;
  for (const auto& c : support_) {
    if (c.permutation.size() != universe_size_) {
      throw std::invalid_argument("RUM permutations over different universes");
    }
    if (!(c.probability >= 0.0 && c.probability <= 1.0)) {
      throw std::invalid_argument("RUM probability outside [0, 1]");
    }
    total += c.probability;
  }
  if (std::abs(total - 1.0) > kNormalizationTol) {
    throw std::invalid_argument("RUM probabilities sum to " + format_double(total));
  }
  std::vector<const Permutation*> sorted;
  sorted.reserve(support_.size());
  for (const auto& c : support_) sorted.push_back(&c.permutation);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return *a < *b; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (*sorted[i] == *sorted[i - 1]) {
      throw std::invalid_argument("RUM support repeats a permutation");
    }
  }
}

Rum Rum::point_mass(Permutation pi) {
  std::vector<RumComponent> support;
  support.push_back({std::move(pi), 1.0});
  return Rum(std::move(support));
}

WinnerTable::WinnerTable(std::size_t n, std::vector<SlateDistribution> entries)
    : n_(n), entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(),
            [](const auto& a, const auto& b) { return a.slate < b.slate; });
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.slate.size() < 2) throw std::invalid_argument("table slates need k >= 2");
    if (i == 0) {
      k_ = e.slate.size();
    } else {
      if (e.slate.size() != k_) throw std::invalid_argument("table slates differ in size");
      if (e.slate == entries_[i - 1].slate) {
        throw std::invalid_argument("table repeats slate " + to_string(e.slate));
      }
    }
    if (e.slate.span_end() > n_) {
      throw std::invalid_argument("slate " + to_string(e.slate) + " outside universe");
    }
    if (e.probabilities.size() != e.slate.size()) {
      throw std::invalid_argument("distribution length differs from slate size");
    }
    double total = 0.0;
    for (double p : e.probabilities) {
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0, 1]");
      total += p;
    }
    if (std::abs(total - 1.0) > kNormalizationTol) {
      throw std::invalid_argument("distribution on " + to_string(e.slate) +
                                  " sums to " + format_double(total));
    }
  }
}

std::size_t WinnerTable::find(const Slate& s) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), s,
                             [](const auto& e, const Slate& key) { return e.slate < key; });
  if (it == entries_.end() || it->slate != s) return entries_.size();
  return static_cast<std::size_t>(it - entries_.begin());
}

std::vector<double> rum_winner_distribution(const Rum& r, const Slate& s) {
  std::vector<double> dist(s.size(), 0.0);
  for (const auto& c : r.support()) {
    dist[s.index_of(permutation_winner(c.permutation, s))] += c.probability;
  }
  // Rounding in the sum can overshoot 1 slightly.
  for (double& p : dist) p = std::min(p, 1.0);
  return dist;
}

double l1_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("l1_distance: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(p[i] - q[i]);
  return total;
}

std::vector<double> slate_errors(const Rum& r, const WinnerTable& table) {
  std::vector<double> errors;
  errors.reserve(table.size());
  for (const auto& e : table.entries()) {
    errors.push_back(l1_distance(rum_winner_distribution(r, e.slate), e.probabilities));
  }
  return errors;
}

double average_l1_error(const Rum& r, const WinnerTable& table) {
  if (table.empty()) throw std::invalid_argument("average_l1_error: empty table");
  const auto errors = slate_errors(r, table);
  double total = 0.0;
  for (double e : errors) total += e;
  return total / static_cast<double>(errors.size());
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_rum(std::ostream& out, const Rum& r) {
  out << "rum v1 n=" << r.universe_size() << '\n';
  for (const auto& c : r.support()) {
    out << format_double(c.probability) << '\t';
    for (std::size_t i = 0; i < c.permutation.size(); ++i) {
      if (i) out << ' ';
      out << c.permutation.at(i);
    }
    out << '\n';
  }
}

Rum read_rum(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t n = 0;
  bool have_header = false;
  std::vector<RumComponent> support;
  auto fail = [&](const std::string& what) {
    throw InputError("rum line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      std::istringstream hs(line);
      std::string magic, version, n_field;
      hs >> magic >> version >> n_field;
      if (magic != "rum" || version != "v1" || n_field.rfind("n=", 0) != 0) {
        fail("expected header 'rum v1 n=<n>'");
      }
      try {
        n = std::stoul(n_field.substr(2));
      } catch (const std::exception&) {
        fail("bad universe size");
      }
      have_header = true;
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) fail("expected 'probability<TAB>items'");
    double prob = 0.0;
    const char* first = line.data();
    auto res = std::from_chars(first, first + tab, prob);
    if (res.ec != std::errc() || res.ptr != first + tab) fail("bad probability");
    std::istringstream items(line.substr(tab + 1));
    std::vector<ItemId> order;
    long long item = 0;
    while (items >> item) {
      if (item < 0) fail("negative item id");
      order.push_back(static_cast<ItemId>(item));
    }
    if (!items.eof()) fail("bad item id");
    if (order.size() != n) fail("permutation length differs from n");
    try {
      support.push_back({Permutation(std::move(order)), prob});
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }
  if (!have_header) throw InputError("rum file: missing header");
  try {
    return Rum(std::move(support));
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("rum file: ") + e.what());
  }
}

}  // namespace rumfit
