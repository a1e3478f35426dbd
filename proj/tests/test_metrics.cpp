#include <doctest.h>

#include <cmath>

#include "gridid/metrics.hpp"
#include "gridid/network.hpp"

using namespace gridid;

namespace {
const char* kNet = GRIDID_DATA_DIR "/ieee33.json";
}

TEST_CASE("rrmse is the Frobenius-norm error ratio") {
  Mat a(1, 2), b(1, 2);
  a << 0.0, 4.0;
  b << 3.0, 0.0;
  CHECK(rrmse(a, b) == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK(rrmse(b, b) == 0.0);

  CMat ca(2, 1), cb(2, 1);
  ca << cx(1, 1), cx(0, 0);
  cb << cx(1, 0), cx(0, -2);
  // difference norms: |j| = 1, |2j| = 2 -> sqrt(5); reference sqrt(5)
  CHECK(rrmse(ca, cb) == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(rrmse(a, Mat::Zero(1, 2)), NumericError);
  CHECK_THROWS_AS(rrmse(a, Mat::Ones(2, 2)), NumericError);

  // Shape carries no meaning beyond entry pairing.
  Mat a4(2, 2), b4(2, 2);
  a4 << 1, 2, 3, 4;
  b4 << 2, 4, 2, 2;
  Mat ar(1, 4), br(1, 4);
  ar << 1, 2, 3, 4;
  br << 2, 4, 2, 2;
  CHECK(rrmse(a4, b4) == doctest::Approx(rrmse(ar, br)).epsilon(1e-15));
}

TEST_CASE("mad averages the absolute deviations") {
  Mat a(2, 2), b(2, 2);
  a << 1, -2, 3, 4;
  b << 0, 0, 0, 0;
  CHECK(mad(a, b) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(mad(b, b) == 0.0);
  CHECK_THROWS_AS(mad(a, Mat::Zero(1, 4)), NumericError);
}

TEST_CASE("admittance rotation preserves magnitudes") {
  const CMat y = build_admittance(load_network(kNet)).complex_matrix();
  const int n = static_cast<int>(y.rows());

  const CMat same = rotated_admittance(y, Vec::Zero(n));
  CHECK((same - y).norm() == 0.0);

  const CMat uni = rotated_admittance(y, Vec::Constant(n, 0.4));
  CHECK((uni - y).norm() / y.norm() < 1e-14);

  Vec alpha = Vec::LinSpaced(n, 0.0, 0.3);
  const CMat rot = rotated_admittance(y, alpha);
  for (int h = 0; h < n; ++h)
    for (int k = 0; k < n; ++k)
      CHECK(std::abs(rot(h, k)) ==
            doctest::Approx(std::abs(y(h, k))).epsilon(1e-13));
  // Unequal node angles break symmetry on any connected pair.
  CHECK(rot(0, 1) != rot(1, 0));

  CHECK_THROWS_AS(rotated_admittance(y, Vec::Zero(n - 1)), NumericError);
}

TEST_CASE("sparsity report counts topology errors off the diagonal") {
  const CMat y = build_admittance(load_network(kNet)).complex_matrix();
  const int n = static_cast<int>(y.rows());
  const double thr = 1e-3;

  // 32 branches -> 64 symmetric off-diagonal entries; the rest are zero.
  const auto [fp_dense, fn_dense] =
      sparsity_report(CMat::Constant(n, n, cx(1, 0)), y, thr);
  CHECK(fp_dense == n * (n - 1) - 64);
  CHECK(fn_dense == 0);

  const auto [fp_empty, fn_empty] = sparsity_report(CMat::Zero(n, n), y, thr);
  CHECK(fp_empty == 0);
  CHECK(fn_empty == 64);

  const auto [fp_self, fn_self] = sparsity_report(y, y, thr);
  CHECK(fp_self == 0);
  CHECK(fn_self == 0);

  CHECK_THROWS_AS(sparsity_report(y, y, 0.0), NumericError);
  CHECK_THROWS_AS(sparsity_report(y, CMat::Zero(n - 1, n - 1), thr),
                  NumericError);
}

TEST_CASE("metric report serializes a stable CSV schema") {
  CHECK(MetricReport::csv_header() ==
        "rrmse_y,rrmse_p_lin,rrmse_q_lin,rrmse_p_adapted,rrmse_q_adapted,"
        "mad_p,mad_q,rrmse_i_re,rrmse_i_im,sparsity_false_positives");
  MetricReport r;
  r.rrmse_y = 0.5;
  r.sparsity_false_positives = 7;
  const std::string row = r.csv_row();
  CHECK(row.substr(0, 4) == "0.5,");
  CHECK(row.substr(row.size() - 2) == ",7");
}
