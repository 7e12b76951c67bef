// Multinomial logit baseline: P(i | S) = exp(u_i) / sum_{j in S} exp(u_j).

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "rumfit/ingest.hpp"
#include "rumfit/model.hpp"

namespace rumfit {

struct MnlModel {
  // One utility per item, shifted so they sum to zero.
  std::vector<double> utilities;
};

struct MnlFitOptions {
  int max_iterations = 5000;
  double step = 1.0;  // initial step of the backtracking search
  double gradient_tol = 1e-6;
  // L2 penalty (ridge/2)|u|^2 on the average log-likelihood. Off by default.
  double ridge = 0.0;
};

// Mean of count * log P(winner | slate) over the observations, per unit count.
double mnl_log_likelihood(const MnlModel& m, const ChoiceDataset& ds);

// Gradient ascent with backtracking on the (penalized) average
// log-likelihood. Stops once the gradient's max-norm is <= gradient_tol.
// `ll_trace`, when given, receives the objective after every iteration.
MnlModel mnl_fit(const ChoiceDataset& ds, const MnlFitOptions& opt = {},
                 std::vector<double>* ll_trace = nullptr);

// Softmax over the slate, aligned with s.items().
std::vector<double> mnl_predict(const MnlModel& m, const Slate& s);

// Prediction for every slate of `slates`, as a winner table.
WinnerTable mnl_predict_table(const MnlModel& m, std::size_t n, std::span<const Slate> slates);

// Header `mnl v1 n=<n>`, then one utility per line.
void write_mnl(std::ostream& out, const MnlModel& m);
MnlModel read_mnl(std::istream& in);

}  // namespace rumfit
