#include "rumfit/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace rumfit {
namespace {

// Calls fn(indices) for every strictly increasing k-tuple of [0, n).
template <typename Fn>
void for_each_combination(std::size_t n, std::size_t k, Fn&& fn) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    fn(std::span<const std::size_t>(idx));
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// (slate, winner) -> count, keyed by slate with counts aligned to its items.
class ObservationCounter {
 public:
  void add(const Slate& s, ItemId winner, std::uint64_t count) {
    auto [it, inserted] = counts_.try_emplace(s);
    if (inserted) it->second.assign(s.size(), 0);
    it->second[s.index_of(winner)] += count;
  }

  std::vector<ChoiceObservation> take() {
    std::vector<ChoiceObservation> out;
    for (auto& [slate, counts] : counts_) {
      for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] > 0) out.push_back({slate, slate[i], counts[i]});
      }
    }
    counts_.clear();
    return out;
  }

 private:
  std::map<Slate, std::vector<std::uint64_t>> counts_;
};

ItemLabels identity_labels(std::size_t n) {
  ItemLabels labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i;
  return labels;
}

[[noreturn]] void fail_line(const char* what, std::size_t line_no, const std::string& msg) {
  throw InputError(std::string(what) + " line " + std::to_string(line_no) + ": " + msg);
}

// Non-blank, non-comment lines with their 1-based numbers.
std::vector<std::pair<std::size_t, std::string>> content_lines(std::istream& in) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    lines.emplace_back(line_no, line);
  }
  return lines;
}

std::optional<std::uint64_t> parse_uint(std::string_view token) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t')) token.remove_suffix(1);
  std::uint64_t v = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    return std::nullopt;
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) return parts;
    start = pos + 1;
  }
}

std::vector<std::uint64_t> parse_id_list(std::string_view text, char sep, const char* what,
                                         std::size_t line_no) {
  std::vector<std::uint64_t> ids;
  if (sep == ' ') {
    std::istringstream ss{std::string(text)};
    std::string tok;
    while (ss >> tok) {
      auto v = parse_uint(tok);
      if (!v) fail_line(what, line_no, "bad item id '" + tok + "'");
      ids.push_back(*v);
    }
  } else {
    for (auto tok : split(text, sep)) {
      auto v = parse_uint(tok);
      if (!v) fail_line(what, line_no, "bad item id '" + std::string(tok) + "'");
      ids.push_back(*v);
    }
  }
  return ids;
}

struct Remap {
  std::map<std::uint64_t, ItemId> dense;
  ItemLabels labels;

  explicit Remap(const std::set<std::uint64_t>& raw) {
    for (auto id : raw) {
      dense.emplace(id, static_cast<ItemId>(labels.size()));
      labels.emplace_back(id);
    }
  }
  ItemId operator()(std::uint64_t raw) const { return dense.at(raw); }
};

bool has_duplicates(std::vector<std::uint64_t> ids) {
  std::sort(ids.begin(), ids.end());
  return std::adjacent_find(ids.begin(), ids.end()) != ids.end();
}

}  // namespace

std::uint64_t ChoiceDataset::total_count() const {
  std::uint64_t total = 0;
  for (const auto& o : observations) total += o.count;
  return total;
}

std::size_t ChoiceDataset::slate_count() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    if (i == 0 || observations[i].slate != observations[i - 1].slate) ++count;
  }
  return count;
}

ChoiceDataset aggregate_observations(std::size_t n, std::size_t k,
                                     std::vector<ChoiceObservation> observations) {
  if (k < 2) throw std::invalid_argument("slate size k must be at least 2");
  ObservationCounter counter;
  for (const auto& o : observations) {
    if (o.slate.size() != k) throw std::invalid_argument("observation slate size differs from k");
    if (o.slate.span_end() > n) throw std::invalid_argument("observation item outside universe");
    if (!o.slate.contains(o.winner)) throw std::invalid_argument("winner not in slate");
    if (o.count == 0) throw std::invalid_argument("observation count must be positive");
    counter.add(o.slate, o.winner, o.count);
  }
  ChoiceDataset ds;
  ds.n = n;
  ds.k = k;
  ds.observations = counter.take();
  ds.labels = identity_labels(n);
  return ds;
}

std::vector<Slate> all_slates(std::size_t n, std::size_t k) {
  std::vector<Slate> slates;
  for_each_combination(n, k, [&](std::span<const std::size_t> idx) {
    slates.emplace_back(std::vector<ItemId>(idx.begin(), idx.end()));
  });
  return slates;
}

ChoiceDataset expand_full_rankings(std::span<const Permutation> rankings, std::size_t k) {
  if (rankings.empty()) throw std::invalid_argument("no rankings to expand");
  const std::size_t n = rankings.front().size();
  if (k < 2 || k > n) {
    throw std::invalid_argument("k=" + std::to_string(k) + " outside [2, " +
                                std::to_string(n) + "]");
  }
  for (const auto& r : rankings) {
    if (r.size() != n) throw std::invalid_argument("rankings over different universes");
  }
  const auto slates = all_slates(n, k);
  std::vector<std::uint64_t> counts(slates.size() * k, 0);
  for (const auto& r : rankings) {
    for (std::size_t s = 0; s < slates.size(); ++s) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < k; ++i) {
        if (r.rank_of(slates[s][i]) < r.rank_of(slates[s][best])) best = i;
      }
      ++counts[s * k + best];
    }
  }
  ChoiceDataset ds;
  ds.n = n;
  ds.k = k;
  ds.labels = identity_labels(n);
  for (std::size_t s = 0; s < slates.size(); ++s) {
    for (std::size_t i = 0; i < k; ++i) {
      if (counts[s * k + i] > 0) ds.observations.push_back({slates[s], slates[s][i], counts[s * k + i]});
    }
  }
  return ds;
}

ChoiceDataset expand_partial_orders(std::span<const std::vector<ItemId>> ballots,
                                    std::size_t n, std::size_t k) {
  if (k < 2) throw std::invalid_argument("slate size k must be at least 2");
  ObservationCounter counter;
  std::size_t skipped = 0;
  for (const auto& ballot : ballots) {
    for (ItemId item : ballot) {
      if (item >= n) throw std::invalid_argument("ballot item outside universe");
    }
    if (has_duplicates({ballot.begin(), ballot.end()})) {
      throw std::invalid_argument("duplicate items within a ballot");
    }
    if (ballot.size() < k) {
      ++skipped;
      continue;
    }
    std::vector<ItemId> chosen(k);
    for_each_combination(ballot.size(), k, [&](std::span<const std::size_t> idx) {
      for (std::size_t i = 0; i < k; ++i) chosen[i] = ballot[idx[i]];
      // idx is increasing, so the first chosen item is the earliest listed.
      counter.add(Slate(chosen), ballot[idx[0]], 1);
    });
  }
  ChoiceDataset ds;
  ds.n = n;
  ds.k = k;
  ds.observations = counter.take();
  ds.labels = identity_labels(n);
  ds.skipped_records = skipped;
  return ds;
}

ChoiceDataset augment_winner_slates(std::span<const WinnerRecord> records, std::size_t n,
                                    std::size_t k) {
  if (k < 2) throw std::invalid_argument("slate size k must be at least 2");
  ObservationCounter counter;
  std::size_t skipped = 0;
  for (const auto& rec : records) {
    const Slate full(rec.slate);
    if (full.span_end() > n) throw std::invalid_argument("slate item outside universe");
    if (!full.contains(rec.winner)) throw std::invalid_argument("winner not in slate");
    if (rec.count == 0) throw std::invalid_argument("record count must be positive");
    if (full.size() < k) {
      ++skipped;
      continue;
    }
    std::vector<ItemId> others;
    for (ItemId item : full.items()) {
      if (item != rec.winner) others.push_back(item);
    }
    std::vector<ItemId> chosen(k);
    for_each_combination(others.size(), k - 1, [&](std::span<const std::size_t> idx) {
      for (std::size_t i = 0; i + 1 < k; ++i) chosen[i] = others[idx[i]];
      chosen[k - 1] = rec.winner;
      counter.add(Slate(chosen), rec.winner, rec.count);
    });
  }
  ChoiceDataset ds;
  ds.n = n;
  ds.k = k;
  ds.observations = counter.take();
  ds.labels = identity_labels(n);
  ds.skipped_records = skipped;
  return ds;
}

WinnerTable empirical_distributions(const ChoiceDataset& ds) {
  if (ds.observations.empty()) throw std::invalid_argument("empirical_distributions: empty dataset");
  std::map<Slate, std::vector<std::uint64_t>> counts;
  for (const auto& o : ds.observations) {
    auto [it, inserted] = counts.try_emplace(o.slate);
    if (inserted) it->second.assign(o.slate.size(), 0);
    it->second[o.slate.index_of(o.winner)] += o.count;
  }
  std::vector<SlateDistribution> entries;
  entries.reserve(counts.size());
  for (const auto& [slate, c] : counts) {
    std::uint64_t total = 0;
    for (auto v : c) total += v;
    std::vector<double> probs(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      probs[i] = static_cast<double>(c[i]) / static_cast<double>(total);
    }
    entries.push_back({slate, std::move(probs)});
  }
  return WinnerTable(ds.n, std::move(entries));
}

ParsedRankings read_rankings(std::istream& in) {
  constexpr const char* kWhat = "rankings";
  const auto lines = content_lines(in);
  std::vector<std::pair<std::size_t, std::vector<std::uint64_t>>> raw;
  std::set<std::uint64_t> ids;
  for (const auto& [line_no, text] : lines) {
    auto row = parse_id_list(text, ' ', kWhat, line_no);
    if (has_duplicates(row)) fail_line(kWhat, line_no, "repeated item in ranking");
    ids.insert(row.begin(), row.end());
    raw.emplace_back(line_no, std::move(row));
  }
  Remap remap(ids);
  ParsedRankings out;
  out.labels = remap.labels;
  for (auto& [line_no, row] : raw) {
    if (row.size() != ids.size()) {
      fail_line(kWhat, line_no, "ranking lists " + std::to_string(row.size()) + " of " +
                                    std::to_string(ids.size()) + " items");
    }
    std::vector<ItemId> order;
    order.reserve(row.size());
    for (auto id : row) order.push_back(remap(id));
    out.rankings.emplace_back(std::move(order));
  }
  return out;
}

ParsedBallots read_ballots(std::istream& in) {
  constexpr const char* kWhat = "ballots";
  const auto lines = content_lines(in);
  if (lines.empty()) throw InputError("ballots: missing header 'n=<n>'");
  ParsedBallots out;
  {
    const auto& [line_no, text] = lines.front();
    auto start = text.find_first_not_of(" \t");
    std::string_view head = std::string_view(text).substr(start);
    if (head.rfind("n=", 0) != 0) fail_line(kWhat, line_no, "expected header 'n=<n>'");
    auto n = parse_uint(head.substr(2));
    if (!n) fail_line(kWhat, line_no, "bad universe size");
    out.n = *n;
  }
  std::vector<std::pair<std::size_t, std::vector<std::uint64_t>>> raw;
  std::set<std::uint64_t> ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [line_no, text] = lines[i];
    auto row = parse_id_list(text, ' ', kWhat, line_no);
    if (has_duplicates(row)) fail_line(kWhat, line_no, "duplicate item within ballot");
    ids.insert(row.begin(), row.end());
    raw.emplace_back(line_no, std::move(row));
  }
  if (ids.size() > out.n) {
    throw InputError("ballots: " + std::to_string(ids.size()) + " distinct items exceed n=" +
                     std::to_string(out.n));
  }
  Remap remap(ids);
  out.labels = remap.labels;
  out.labels.resize(out.n);
  for (auto& [line_no, row] : raw) {
    std::vector<ItemId> ballot;
    for (auto id : row) ballot.push_back(remap(id));
    out.ballots.push_back(std::move(ballot));
  }
  return out;
}

ParsedSlates read_slate_records(std::istream& in) {
  constexpr const char* kWhat = "slates";
  const auto lines = content_lines(in);
  struct RawRecord {
    std::size_t line_no;
    std::vector<std::uint64_t> slate;
    std::uint64_t winner;
    std::uint64_t count;
  };
  std::vector<RawRecord> raw;
  std::set<std::uint64_t> ids;
  for (const auto& [line_no, text] : lines) {
    const auto fields = split(text, ';');
    if (fields.size() < 2 || fields.size() > 3) {
      fail_line(kWhat, line_no, "expected 'i1,...,im;winner[;count]'");
    }
    auto slate = parse_id_list(fields[0], ',', kWhat, line_no);
    if (has_duplicates(slate)) fail_line(kWhat, line_no, "duplicate item in slate");
    auto winner = parse_uint(fields[1]);
    if (!winner) fail_line(kWhat, line_no, "bad winner '" + std::string(fields[1]) + "'");
    if (std::find(slate.begin(), slate.end(), *winner) == slate.end()) {
      fail_line(kWhat, line_no, "winner not in slate");
    }
    std::uint64_t count = 1;
    if (fields.size() == 3) {
      auto c = parse_uint(fields[2]);
      if (!c || *c == 0) fail_line(kWhat, line_no, "count must be a positive integer");
      count = *c;
    }
    ids.insert(slate.begin(), slate.end());
    raw.push_back({line_no, std::move(slate), *winner, count});
  }
  Remap remap(ids);
  ParsedSlates out;
  out.n = ids.size();
  out.labels = remap.labels;
  for (const auto& r : raw) {
    WinnerRecord rec;
    for (auto id : r.slate) rec.slate.push_back(remap(id));
    rec.winner = remap(r.winner);
    rec.count = r.count;
    out.records.push_back(std::move(rec));
  }
  return out;
}

DatasetFormat parse_dataset_format(const std::string& name) {
  if (name == "canonical") return DatasetFormat::canonical;
  if (name == "rankings") return DatasetFormat::rankings;
  if (name == "ballots") return DatasetFormat::ballots;
  if (name == "slates") return DatasetFormat::slates;
  throw InputError("unknown dataset format '" + name + "'");
}

std::string to_string(DatasetFormat f) {
  switch (f) {
    case DatasetFormat::canonical: return "canonical";
    case DatasetFormat::rankings: return "rankings";
    case DatasetFormat::ballots: return "ballots";
    case DatasetFormat::slates: return "slates";
  }
  return "?";
}

ChoiceDataset load_dataset(std::istream& in, DatasetFormat format, std::optional<std::size_t> k) {
  if (format == DatasetFormat::canonical) {
    auto ds = read_canonical_dataset(in);
    if (k && *k != ds.k) {
      throw InputError("dataset has k=" + std::to_string(ds.k) + " but k=" + std::to_string(*k) +
                       " was requested");
    }
    return ds;
  }
  if (!k) throw InputError("--k is required for " + to_string(format) + " input");
  try {
    switch (format) {
      case DatasetFormat::rankings: {
        auto parsed = read_rankings(in);
        if (parsed.rankings.empty()) throw InputError("rankings: no rankings");
        auto ds = expand_full_rankings(parsed.rankings, *k);
        ds.labels = std::move(parsed.labels);
        return ds;
      }
      case DatasetFormat::ballots: {
        auto parsed = read_ballots(in);
        auto ds = expand_partial_orders(parsed.ballots, parsed.n, *k);
        ds.labels = std::move(parsed.labels);
        return ds;
      }
      case DatasetFormat::slates: {
        auto parsed = read_slate_records(in);
        auto ds = augment_winner_slates(parsed.records, parsed.n, *k);
        ds.labels = std::move(parsed.labels);
        return ds;
      }
      case DatasetFormat::canonical: break;
    }
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  throw InputError("unsupported format");
}

ChoiceDataset load_dataset_file(const std::string& path, DatasetFormat format,
                                std::optional<std::size_t> k) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset '" + path + "'");
  return load_dataset(in, format, k);
}

void write_canonical_dataset(std::ostream& out, const ChoiceDataset& ds) {
  out << "k=" << ds.k << " n=" << ds.n << '\n';
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    out << "# item " << i << ' ';
    if (ds.labels[i]) {
      out << *ds.labels[i];
    } else {
      out << '-';
    }
    out << '\n';
  }
  for (const auto& o : ds.observations) {
    for (std::size_t i = 0; i < o.slate.size(); ++i) {
      if (i) out << ',';
      out << o.slate[i];
    }
    out << ';' << o.winner << ';' << o.count << '\n';
  }
}

ChoiceDataset read_canonical_dataset(std::istream& in) {
  constexpr const char* kWhat = "dataset";
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t n = 0, k = 0;
  ItemLabels labels;
  bool have_labels = false;
  std::vector<ChoiceObservation> obs;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      std::istringstream cs(line.substr(first + 1));
      std::string tag, raw;
      std::size_t id = 0;
      if (have_header && (cs >> tag) && tag == "item" && (cs >> id >> raw) && id < n) {
        if (!have_labels) labels.assign(n, std::nullopt);
        have_labels = true;
        labels[id] = parse_uint(raw);
      }
      continue;
    }
    if (!have_header) {
      std::istringstream hs(line);
      std::string kf, nf;
      hs >> kf >> nf;
      std::optional<std::uint64_t> kv, nv;
      if (kf.rfind("k=", 0) == 0) kv = parse_uint(std::string_view(kf).substr(2));
      if (nf.rfind("n=", 0) == 0) nv = parse_uint(std::string_view(nf).substr(2));
      if (!kv || !nv) fail_line(kWhat, line_no, "expected header 'k=<k> n=<n>'");
      k = *kv;
      n = *nv;
      if (k < 2) fail_line(kWhat, line_no, "k must be at least 2");
      have_header = true;
      continue;
    }
    const auto fields = split(line, ';');
    if (fields.size() != 3) fail_line(kWhat, line_no, "expected 'i1,...,ik;winner;count'");
    auto items = parse_id_list(fields[0], ',', kWhat, line_no);
    auto winner = parse_uint(fields[1]);
    auto count = parse_uint(fields[2]);
    if (!winner || !count || *count == 0) fail_line(kWhat, line_no, "bad winner or count");
    if (items.size() != k) fail_line(kWhat, line_no, "slate size differs from k");
    std::vector<ItemId> ids;
    for (auto v : items) {
      if (v >= n) fail_line(kWhat, line_no, "item outside universe");
      ids.push_back(static_cast<ItemId>(v));
    }
    if (has_duplicates(items)) fail_line(kWhat, line_no, "duplicate item in slate");
    Slate slate(std::move(ids));
    if (*winner >= n || !slate.contains(static_cast<ItemId>(*winner))) {
      fail_line(kWhat, line_no, "winner not in slate");
    }
    obs.push_back({std::move(slate), static_cast<ItemId>(*winner), *count});
  }
  if (!have_header) throw InputError("dataset: missing header 'k=<k> n=<n>'");
  auto ds = aggregate_observations(n, k, std::move(obs));
  if (have_labels) ds.labels = std::move(labels);
  return ds;
}

}  // namespace rumfit
