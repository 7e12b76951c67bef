// Choice datasets: raw file parsing, the three k-slate expansions, and the
// canonical dataset file.
//
// Raw item ids are remapped to a dense 0-based universe (ascending numeric
// order of the raw ids). The mapping travels with the dataset so reports can
// name items by their original ids.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rumfit/model.hpp"

namespace rumfit {

struct ChoiceObservation {
  Slate slate;
  ItemId winner = 0;
  std::uint64_t count = 1;

  friend bool operator==(const ChoiceObservation&, const ChoiceObservation&) = default;
};

// Raw id of each dense item; std::nullopt for universe padding that never
// appears in the input (ballot files may declare a larger n).
using ItemLabels = std::vector<std::optional<std::uint64_t>>;

// Observations on k-slates of [0, n), merged by (slate, winner) and sorted in
// canonical order.
struct ChoiceDataset {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<ChoiceObservation> observations;
  ItemLabels labels;
  // Input records that produced no observation (ballots or slates shorter
  // than k).
  std::size_t skipped_records = 0;

  std::uint64_t total_count() const;
  std::size_t slate_count() const;
};

// Merges duplicates by summing counts and sorts by (slate, winner). Validates
// slate size k, items < n, winner in slate, count >= 1.
ChoiceDataset aggregate_observations(std::size_t n, std::size_t k,
                                     std::vector<ChoiceObservation> observations);

// Every k-subset of [0, n) for each full ranking, won by its highest ranked
// member. Throws std::invalid_argument unless 2 <= k <= n and all rankings
// share one universe.
ChoiceDataset expand_full_rankings(std::span<const Permutation> rankings, std::size_t k);

// Every k-subset of each ballot's items, won by the member listed first.
// Ballots shorter than k are skipped and counted in skipped_records.
ChoiceDataset expand_partial_orders(std::span<const std::vector<ItemId>> ballots,
                                    std::size_t n, std::size_t k);

// A slate of any size with its observed winner.
struct WinnerRecord {
  std::vector<ItemId> slate;
  ItemId winner = 0;
  std::uint64_t count = 1;
};

// Each (S, w) with |S| >= k becomes the C(|S|-1, k-1) k-subsets of S that
// contain w, all won by w. Shorter records are skipped and counted.
ChoiceDataset augment_winner_slates(std::span<const WinnerRecord> records, std::size_t n,
                                    std::size_t k);

// D_S(i) = count(S, i) / count(S). Throws std::invalid_argument on an empty
// dataset.
WinnerTable empirical_distributions(const ChoiceDataset& ds);

// Every k-subset of [0, n) in lexicographic order.
std::vector<Slate> all_slates(std::size_t n, std::size_t k);

// --- Raw input formats. Blank lines and '#' comments are ignored; errors are
// InputError carrying the 1-based line number.

struct ParsedRankings {
  std::vector<Permutation> rankings;
  ItemLabels labels;
};
// One whitespace-separated full permutation per line.
ParsedRankings read_rankings(std::istream& in);

struct ParsedBallots {
  std::size_t n = 0;
  std::vector<std::vector<ItemId>> ballots;
  ItemLabels labels;
};
// Header `n=<n>`, then one ordered subset per line.
ParsedBallots read_ballots(std::istream& in);

struct ParsedSlates {
  std::size_t n = 0;
  std::vector<WinnerRecord> records;
  ItemLabels labels;
};
// `i1,i2,...,im;winner[;count]` per line.
ParsedSlates read_slate_records(std::istream& in);

enum class DatasetFormat { canonical, rankings, ballots, slates };

DatasetFormat parse_dataset_format(const std::string& name);
std::string to_string(DatasetFormat f);

// Reads any supported format; `k` is required for the raw formats and
// checked against the header for canonical files.
ChoiceDataset load_dataset(std::istream& in, DatasetFormat format, std::optional<std::size_t> k);
ChoiceDataset load_dataset_file(const std::string& path, DatasetFormat format,
                                std::optional<std::size_t> k);

// Canonical file: header `k=<k> n=<n>`, `# item <id> <raw>` label comments,
// then `i1,...,ik;winner;count` lines in canonical order.
void write_canonical_dataset(std::ostream& out, const ChoiceDataset& ds);
ChoiceDataset read_canonical_dataset(std::istream& in);

}  // namespace rumfit
