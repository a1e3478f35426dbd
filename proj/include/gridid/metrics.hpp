#pragma once

#include <string>
#include <utility>

#include "gridid/types.hpp"

namespace gridid {

// ||x - x_exact||_F / ||x_exact||_F. Throws NumericError on zero reference.
double rrmse(const Mat& x, const Mat& x_exact);
double rrmse(const CMat& x, const CMat& x_exact);

// Mean absolute deviation over all entries.
double mad(const Mat& x, const Mat& x_exact);

// A = D Y D* with D = diag(e^{j alpha}); |A_hk| == |Y_hk|.
CMat rotated_admittance(const CMat& y, const Vec& alpha);

// Off-diagonal positions with |y_hat| > threshold where y_true == 0 (false
// positives) and the converse (false negatives).
std::pair<int, int> sparsity_report(const CMat& y_hat, const CMat& y_true,
                                    double threshold);

struct MetricReport {
  double rrmse_y = 0;
  double rrmse_p_lin = 0, rrmse_q_lin = 0;
  double rrmse_p_adapted = 0, rrmse_q_adapted = 0;
  double mad_p = 0, mad_q = 0;  // MW / MVAr
  double rrmse_i_re = 0, rrmse_i_im = 0;
  int sparsity_false_positives = 0;

  static std::string csv_header();
  std::string csv_row() const;
};

}  // namespace gridid
