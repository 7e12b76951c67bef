// Fit quality reports and cross-validated prediction error.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rumfit/fitting.hpp"
#include "rumfit/ingest.hpp"
#include "rumfit/mnl.hpp"
#include "rumfit/model.hpp"

namespace rumfit {

struct CdfPoint {
  double x = 0.0;  // error threshold
  double y = 0.0;  // fraction of slates with error <= x
};

struct ErrorCdf {
  // One point per distinct error value, ascending; the last y is 1.
  std::vector<CdfPoint> points;

  // Mean error recovered from the step function.
  double mean() const;
};

ErrorCdf error_cdf_from_errors(std::vector<double> errors);
ErrorCdf error_cdf(const Rum& r, const WinnerTable& table);

// sqrt( (1/|S|) sum_{S,i} (D_S(i) - P_S(i))^2 ) over the slates of `actual`.
// Throws std::invalid_argument if a slate of `actual` is missing from
// `predicted` or the two tables differ in slate count.
double rmse(const WinnerTable& predicted, const WinnerTable& actual);

enum class PredictModel { rum, mnl, train_tensor };

std::string to_string(PredictModel m);
PredictModel parse_predict_model(const std::string& s);  // "rum" | "mnl" | "tensor"

struct FoldSplit {
  ChoiceDataset train;
  ChoiceDataset test;
};

// Shuffles the observation units (each count expanded) with a stream derived
// from `seed`, then cuts them into `folds` contiguous blocks whose sizes
// differ by at most one. Throws std::invalid_argument when folds < 2 or
// exceeds the number of units.
std::vector<ChoiceDataset> split_folds(const ChoiceDataset& ds, std::size_t folds,
                                       std::uint64_t seed);
// Fold f as test, the union of the others as training data.
FoldSplit fold_split(const std::vector<ChoiceDataset>& folds, std::size_t f);

// Training distribution on seen slates, uniform on unseen ones.
WinnerTable train_tensor_predict(const WinnerTable& train, const WinnerTable& test);

struct CvConfig {
  std::size_t folds = 5;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::size_t max_iterations = 250;
  FitConfig fit;     // max_iterations is overridden by the field above
  MnlFitOptions mnl;
  // Seed x fold cells run on this many workers.
  unsigned threads = 1;
};

struct CvCell {
  std::uint64_t seed = 0;
  std::size_t fold = 0;
  double rmse = 0.0;
};

struct CvSummary {
  PredictModel model = PredictModel::rum;
  std::vector<CvCell> cells;  // seed-major, fold-minor
  double mean = 0.0;
  // Population standard deviation over all cells.
  double stddev = 0.0;
};

CvSummary cross_validate(const ChoiceDataset& ds, const CvConfig& cfg, PredictModel model);

struct FitReportRow {
  std::string dataset;
  std::size_t k = 0;
  std::size_t support_size = 0;
  double average_error = 0.0;
  std::optional<double> lower_bound;
};

void write_fit_report_csv(std::ostream& out, const std::vector<FitReportRow>& rows);
void write_error_cdf_csv(std::ostream& out, const ErrorCdf& cdf);
void write_cv_report_csv(std::ostream& out, const std::vector<CvSummary>& summaries);

}  // namespace rumfit
