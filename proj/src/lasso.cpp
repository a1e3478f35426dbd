#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gridid/estimation.hpp"

namespace gridid {

namespace {

constexpr double kWeightFloor = 1e-6;  // keeps adaptive weights finite
constexpr double kCdTol = 1e-8;
constexpr int kCdMaxSweeps = 500;

inline double soft(double x, double tau) {
  if (x > tau) return x - tau;
  if (x < -tau) return x + tau;
  return 0.0;
}

// Minimizes ||I - V*Y||_F^2 + lambda * sum_{h<k} w_hk (|Re Y_hk| + |Im Y_hk|)
// over symmetric Y by cyclic coordinate descent on the upper triangle.
// Diagonal entries are never penalized.
CMat cd_fit(const CMat& V, const CMat& I, const Mat& pen_w, double lambda,
            const CMat& y0) {
  const int n = static_cast<int>(V.cols());
  CMat Y = y0;
  CMat Rres = I - V * Y;

  std::vector<double> colsq(static_cast<size_t>(n));
  for (int a = 0; a < n; ++a)
    colsq[static_cast<size_t>(a)] = V.col(a).squaredNorm();

  for (int sweep = 0; sweep < kCdMaxSweeps; ++sweep) {
    double max_step = 0.0, max_mag = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        const cx yold = Y(a, b);
        double a2;
        cx z;
        if (a == b) {
          a2 = colsq[static_cast<size_t>(a)];
          z = V.col(a).dot(Rres.col(a)) + a2 * yold;
        } else {
          a2 = colsq[static_cast<size_t>(a)] + colsq[static_cast<size_t>(b)];
          z = V.col(b).dot(Rres.col(a)) + V.col(a).dot(Rres.col(b)) +
              a2 * yold;
        }
        if (a2 <= 0.0) continue;
        cx ynew;
        if (a == b || lambda == 0.0) {
          ynew = z / a2;
        } else {
          const double tau = 0.5 * lambda * pen_w(a, b);
          ynew = cx(soft(z.real(), tau), soft(z.imag(), tau)) / a2;
        }
        const cx d = ynew - yold;
        if (d != cx(0, 0)) {
          Y(a, b) = ynew;
          Y(b, a) = ynew;
          if (a == b) {
            Rres.col(a) -= V.col(a) * d;
          } else {
            Rres.col(a) -= V.col(b) * d;
            Rres.col(b) -= V.col(a) * d;
          }
        }
        max_step = std::max(max_step, std::abs(d));
        max_mag = std::max(max_mag, std::abs(ynew));
      }
    if (max_step <= kCdTol * std::max(max_mag, 1.0)) break;
  }
  return Y;
}

}  // namespace

std::vector<double> default_lambda_grid() {
  // Relative to the data-driven scale computed inside lasso_estimate.
  std::vector<double> g{0.0};
  for (int i = -7; i <= 0; ++i) {
    g.push_back(std::pow(10.0, i));
    if (i < 0) g.push_back(3.16227766016838 * std::pow(10.0, i));
  }
  return g;
}

CMat lasso_estimate(const MeasurementSet& ms,
                    const std::vector<double>& lambda_grid) {
  if (lambda_grid.empty()) throw ConfigError("empty lambda grid");
  const CMat y_ols = ols_estimate(ms, true);
  const int N = ms.N(), n = ms.n();

  Mat pen_w(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      pen_w(a, b) = 1.0 / (std::abs(y_ols(a, b)) + kWeightFloor);

  const CMat V = ms.voltage();
  const CMat I = ms.current();
  const int n_train = std::max(n, (N * 4) / 5);  // chronological 80/20 split
  if (n_train >= N)
    throw NumericError("too few samples for the validation split");
  const CMat Vtr = V.topRows(n_train), Itr = I.topRows(n_train);
  const CMat Vva = V.bottomRows(N - n_train), Iva = I.bottomRows(N - n_train);

  // Scale at which the strongest penalized coordinate is driven to zero.
  double lam_scale = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const cx z = Vtr.col(b).dot(Itr.col(a)) + Vtr.col(a).dot(Itr.col(b));
      const double m =
          2.0 * std::max(std::abs(z.real()), std::abs(z.imag())) /
          pen_w(a, b);
      lam_scale = std::max(lam_scale, m);
    }
  if (lam_scale <= 0.0) lam_scale = 1.0;

  std::vector<double> lambdas = lambda_grid;
  std::sort(lambdas.begin(), lambdas.end());

  double best_err = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> errs;  // (lambda, val error)
  CMat warm = y_ols;
  std::vector<CMat> fits;
  for (double rel : lambdas) {
    if (rel < 0) throw ConfigError("negative lambda");
    const double lam = rel * lam_scale;
    const CMat Yl = cd_fit(Vtr, Itr, pen_w, lam, warm);
    warm = Yl;
    const double err = (Iva - Vva * Yl).norm();
    errs.emplace_back(rel, err);
    fits.push_back(Yl);
    best_err = std::min(best_err, err);
  }

  // Smallest lambda within 1% of the best validation error.
  size_t pick = 0;
  for (size_t i = 0; i < errs.size(); ++i)
    if (errs[i].second <= 1.01 * best_err) {
      pick = i;
      break;
    }

  // Refit on the full record at the chosen penalty.
  return cd_fit(V, I, pen_w, errs[pick].first * lam_scale, fits[pick]);
}

}  // namespace gridid
