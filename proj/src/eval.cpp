#include "rumfit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "rumfit/random.hpp"

namespace rumfit {

double ErrorCdf::mean() const {
  double m = 0.0, prev = 0.0;
  for (const auto& p : points) {
    m += p.x * (p.y - prev);
    prev = p.y;
  }
  return m;
}

ErrorCdf error_cdf_from_errors(std::vector<double> errors) {
  if (errors.empty()) throw std::invalid_argument("error CDF of an empty table");
  std::sort(errors.begin(), errors.end());
  ErrorCdf cdf;
  const double total = static_cast<double>(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (i + 1 < errors.size() && errors[i + 1] == errors[i]) continue;
    cdf.points.push_back({errors[i], static_cast<double>(i + 1) / total});
  }
  return cdf;
}

ErrorCdf error_cdf(const Rum& r, const WinnerTable& table) {
  return error_cdf_from_errors(slate_errors(r, table));
}

double rmse(const WinnerTable& predicted, const WinnerTable& actual) {
  if (actual.empty()) throw std::invalid_argument("rmse of an empty table");
  if (predicted.size() != actual.size()) {
    throw std::invalid_argument("rmse: predicted and actual cover different slate sets");
  }
  double sum = 0.0;
  for (const auto& e : actual.entries()) {
    const std::size_t idx = predicted.find(e.slate);
    if (idx == predicted.size()) {
      throw std::invalid_argument("rmse: slate " + to_string(e.slate) + " has no prediction");
    }
    const auto& p = predicted[idx].probabilities;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = e.probabilities[i] - p[i];
      sum += d * d;
    }
  }
  return std::sqrt(sum / static_cast<double>(actual.size()));
}

std::string to_string(PredictModel m) {
  switch (m) {
    case PredictModel::rum: return "rum";
    case PredictModel::mnl: return "mnl";
    case PredictModel::train_tensor: return "tensor";
  }
  return "?";
}

PredictModel parse_predict_model(const std::string& s) {
  if (s == "rum") return PredictModel::rum;
  if (s == "mnl") return PredictModel::mnl;
  if (s == "tensor" || s == "train-tensor") return PredictModel::train_tensor;
  throw std::invalid_argument("unknown model '" + s + "' (expected rum, mnl or tensor)");
}

std::vector<ChoiceDataset> split_folds(const ChoiceDataset& ds, std::size_t folds,
                                       std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("need at least 2 folds");
  std::vector<std::size_t> units;
  units.reserve(ds.total_count());
  for (std::size_t o = 0; o < ds.observations.size(); ++o) {
    units.insert(units.end(), ds.observations[o].count, o);
  }
  if (folds > units.size()) {
    throw std::invalid_argument("more folds (" + std::to_string(folds) + ") than observations (" +
                                std::to_string(units.size()) + ")");
  }
  Rng rng(derive_seed(seed, "cv-split"));
  shuffle_in_place(units, rng);
  std::vector<ChoiceDataset> out;
  out.reserve(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t lo = f * units.size() / folds;
    const std::size_t hi = (f + 1) * units.size() / folds;
    std::vector<ChoiceObservation> obs;
    obs.reserve(hi - lo);
    for (std::size_t u = lo; u < hi; ++u) {
      const auto& src = ds.observations[units[u]];
      obs.push_back({src.slate, src.winner, 1});
    }
    auto part = aggregate_observations(ds.n, ds.k, std::move(obs));
    part.labels = ds.labels;
    out.push_back(std::move(part));
  }
  return out;
}

FoldSplit fold_split(const std::vector<ChoiceDataset>& folds, std::size_t f) {
  if (f >= folds.size()) throw std::out_of_range("fold index out of range");
  std::vector<ChoiceObservation> train;
  for (std::size_t g = 0; g < folds.size(); ++g) {
    if (g == f) continue;
    train.insert(train.end(), folds[g].observations.begin(), folds[g].observations.end());
  }
  const auto& test = folds[f];
  auto merged = aggregate_observations(test.n, test.k, std::move(train));
  merged.labels = test.labels;
  return {std::move(merged), test};
}

WinnerTable train_tensor_predict(const WinnerTable& train, const WinnerTable& test) {
  std::vector<SlateDistribution> entries;
  entries.reserve(test.size());
  for (const auto& e : test.entries()) {
    const std::size_t idx = train.find(e.slate);
    if (idx != train.size()) {
      entries.push_back(train[idx]);
    } else {
      entries.push_back({e.slate, std::vector<double>(e.slate.size(), 1.0 / e.slate.size())});
    }
  }
  return WinnerTable(test.universe_size(), std::move(entries));
}

namespace {

double evaluate_cell(const FoldSplit& split, const CvConfig& cfg, PredictModel model,
                     std::uint64_t cell_seed) {
  const auto test = empirical_distributions(split.test);
  std::vector<Slate> slates;
  slates.reserve(test.size());
  for (const auto& e : test.entries()) slates.push_back(e.slate);

  switch (model) {
    case PredictModel::train_tensor:
      return rmse(train_tensor_predict(empirical_distributions(split.train), test), test);
    case PredictModel::mnl: {
      const auto m = mnl_fit(split.train, cfg.mnl);
      return rmse(mnl_predict_table(m, test.universe_size(), slates), test);
    }
    case PredictModel::rum: {
      FitConfig fc = cfg.fit;
      fc.max_iterations = cfg.max_iterations;
      fc.compute_lower_bound = false;
      fc.seed = cell_seed;
      if (cfg.threads > 1) fc.threads = 1;
      const auto report = fit_rum(empirical_distributions(split.train), fc);
      std::vector<SlateDistribution> pred;
      pred.reserve(slates.size());
      for (const auto& s : slates) pred.push_back({s, rum_winner_distribution(report.rum, s)});
      return rmse(WinnerTable(test.universe_size(), std::move(pred)), test);
    }
  }
  throw std::logic_error("unknown model");
}

}  // namespace

CvSummary cross_validate(const ChoiceDataset& ds, const CvConfig& cfg, PredictModel model) {
  if (ds.observations.empty()) throw std::invalid_argument("cross-validation of an empty dataset");
  if (cfg.seeds.empty()) throw std::invalid_argument("cross-validation needs at least one seed");
  CvSummary summary;
  summary.model = model;
  const std::size_t cells = cfg.seeds.size() * cfg.folds;
  summary.cells.resize(cells);

  std::vector<std::vector<ChoiceDataset>> splits;
  splits.reserve(cfg.seeds.size());
  for (auto seed : cfg.seeds) splits.push_back(split_folds(ds, cfg.folds, seed));

  parallel_for(cells, cfg.threads, [&](std::size_t c) {
    const std::size_t s = c / cfg.folds;
    const std::size_t f = c % cfg.folds;
    const auto split = fold_split(splits[s], f);
    const auto cell_seed = derive_seed(derive_seed(cfg.seeds[s], "cv-fit"), f);
    summary.cells[c] = {cfg.seeds[s], f, evaluate_cell(split, cfg, model, cell_seed)};
  });

  double sum = 0.0;
  for (const auto& c : summary.cells) sum += c.rmse;
  summary.mean = sum / static_cast<double>(cells);
  double var = 0.0;
  for (const auto& c : summary.cells) var += (c.rmse - summary.mean) * (c.rmse - summary.mean);
  summary.stddev = std::sqrt(var / static_cast<double>(cells));
  return summary;
}

void write_fit_report_csv(std::ostream& out, const std::vector<FitReportRow>& rows) {
  out << "dataset,k,|P|,avg_error,lower_bound\n";
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.k << ',' << r.support_size << ',' << format_double(r.average_error)
        << ',' << (r.lower_bound ? format_double(*r.lower_bound) : std::string()) << '\n';
  }
}

void write_error_cdf_csv(std::ostream& out, const ErrorCdf& cdf) {
  out << "x,y\n";
  for (const auto& p : cdf.points) out << format_double(p.x) << ',' << format_double(p.y) << '\n';
}

void write_cv_report_csv(std::ostream& out, const std::vector<CvSummary>& summaries) {
  out << "model,seed,fold,rmse\n";
  for (const auto& s : summaries) {
    for (const auto& c : s.cells) {
      out << to_string(s.model) << ',' << c.seed << ',' << c.fold << ',' << format_double(c.rmse)
          << '\n';
    }
  }
}

}  // namespace rumfit
