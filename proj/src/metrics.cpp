#include "gridid/metrics.hpp"

#include <cmath>
#include <sstream>

#include "gridid/io.hpp"

namespace gridid {

double rrmse(const Mat& est, const Mat& truth) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols())
    throw NumericError("rrmse shape mismatch");
  const double denom = truth.norm();
  if (denom == 0.0) throw NumericError("rrmse reference is all zero");
  return (est - truth).norm() / denom;
}

double rrmse(const CMat& est, const CMat& truth) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols())
    throw NumericError("rrmse shape mismatch");
  const double denom = truth.norm();
  if (denom == 0.0) throw NumericError("rrmse reference is all zero");
  return (est - truth).norm() / denom;
}

double mad(const Mat& est, const Mat& truth) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols())
    throw NumericError("mad shape mismatch");
  return (est - truth).cwiseAbs().mean();
}

CMat rotated_admittance(const CMat& y, const Vec& alpha) {
  if (y.rows() != y.cols() || alpha.size() != y.rows())
    throw NumericError("rotated_admittance shape mismatch");
  const int n = static_cast<int>(y.rows());
  CMat a(n, n);
  for (int h = 0; h < n; ++h)
    for (int k = 0; k < n; ++k)
      a(h, k) = std::polar(1.0, alpha[h]) * y(h, k) *
                std::polar(1.0, -alpha[k]);
  return a;
}

std::pair<int, int> sparsity_report(const CMat& y_hat, const CMat& y_true,
                                    double threshold) {
  if (y_hat.rows() != y_hat.cols() || y_hat.rows() != y_true.rows() ||
      y_true.rows() != y_true.cols())
    throw NumericError("sparsity_report expects square matrices");
  if (!(threshold > 0)) throw NumericError("sparsity threshold must be > 0");
  int fp = 0, fn = 0;
  const int n = static_cast<int>(y_hat.rows());
  for (int h = 0; h < n; ++h)
    for (int k = 0; k < n; ++k) {
      if (h == k) continue;
      const bool est_on = std::abs(y_hat(h, k)) > threshold;
      const bool true_on = y_true(h, k) != cx(0, 0);
      if (est_on && !true_on) ++fp;
      if (!est_on && true_on) ++fn;
    }
  return {fp, fn};
}

std::string MetricReport::csv_header() {
  return "rrmse_y,rrmse_p_lin,rrmse_q_lin,rrmse_p_adapted,rrmse_q_adapted,"
         "mad_p,mad_q,rrmse_i_re,rrmse_i_im,sparsity_false_positives";
}

std::string MetricReport::csv_row() const {
  std::ostringstream os;
  os << fmt_g17(rrmse_y) << ',' << fmt_g17(rrmse_p_lin) << ','
     << fmt_g17(rrmse_q_lin) << ',' << fmt_g17(rrmse_p_adapted) << ','
     << fmt_g17(rrmse_q_adapted) << ',' << fmt_g17(mad_p) << ','
     << fmt_g17(mad_q) << ',' << fmt_g17(rrmse_i_re) << ','
     << fmt_g17(rrmse_i_im) << ',' << sparsity_false_positives;
  return os.str();
}

}  // namespace gridid
