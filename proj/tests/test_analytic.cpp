#include <gtest/gtest.h>

#include "freqperf/analytic.hpp"
#include "freqperf/h2.hpp"
#include "freqperf/models.hpp"
#include "oracles.hpp"

using namespace freqperf;

TEST(Analytic, BroadcastIsSizeIndependent) {
  for (int n : {2, 5, 20, 100}) {
    const auto p = GridParameters::uniform(n);
    EXPECT_NEAR(h2_norm(assemble_broadcast(build_path(n), p)).value, 1.0 / 12.0, 1e-10) << "n = " << n;
    EXPECT_DOUBLE_EQ(broadcast_h2(p), 1.0 / 12.0);
  }
}

TEST(Analytic, PrimalDualAlphaZeroIsLinearInSize) {
  for (int n : {2, 5, 20}) {
    const auto p = GridParameters::uniform(n);
    const double num = h2_norm(assemble_primal_dual(build_path(n), p)).value;
    EXPECT_NEAR(num, n / 12.0, 1e-8 * num);
    EXPECT_NEAR(pd_h2_exact_alpha0(p), n / 12.0, 1e-15);
  }
}

TEST(Analytic, PrimalDualAlphaZeroIgnoresTauNu) {
  const auto g = build_path(5);
  for (double tau_nu : {0.5, 6.0, 40.0}) {
    auto p = GridParameters::uniform(5);
    p.tau_nu = tau_nu;
    EXPECT_NEAR(h2_norm(assemble_primal_dual(g, p)).value, pd_h2_exact_alpha0(p), 1e-10);
  }
}

TEST(Analytic, PrimalDualBound) {
  const auto g = build_path(5);
  for (double alpha : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    auto p = GridParameters::uniform(5);
    p.alpha = alpha;
    const double num = h2_norm(assemble_primal_dual(g, p)).value;
    EXPECT_LE(num, pd_h2_upper_bound(p) * (1.0 + 1e-12)) << "alpha = " << alpha;
    if (alpha == 0.0) EXPECT_NEAR(num, pd_h2_upper_bound(p), 1e-8 * num);
  }
}

TEST(Analytic, DapiMatchesModalOracle) {
  for (int n : {2, 5, 9}) {
    for (double gamma : {0.1, 1.0, 5.0, 50.0}) {
      auto p = GridParameters::uniform(n);
      p.gamma = gamma;
      const Eigen::VectorXd eig = oracle::path_spectrum(n);
      const double ref = oracle::dapi_modal_sum(eig, 1.0, 1.0, 1.0, 4.0, 6.0, gamma);
      EXPECT_NEAR(dapi_h2(p, eig).value, ref, 1e-9 * ref) << n << " " << gamma;
      EXPECT_NEAR(h2_norm(assemble_dapi(build_path(n), p)).value, ref, 1e-8 * ref) << n << " " << gamma;
    }
  }
}

TEST(Analytic, DapiModalOracleWithOtherParameters) {
  ScalarParameters s;
  s.m = 0.4;
  s.d = 1.7;
  s.b = 0.8;
  s.k = 2.5;
  s.tau = 3.0;
  s.gamma = 2.0;
  const auto g = build_from_edges(5, {{0, 1, 1.0, 1}, {1, 2, 1.0, 1}, {2, 3, 1.0, 1}, {3, 4, 1.0, 1}, {4, 0, 1.0, 1}});
  const auto p = GridParameters::uniform(5, s);
  const double ref = oracle::dapi_modal_sum(spectrum(g), s.m, s.d, s.b, s.k, s.tau, s.gamma);
  EXPECT_NEAR(dapi_h2(p, spectrum(g)).value, ref, 1e-9 * ref);
  EXPECT_NEAR(h2_norm(assemble_dapi(g, p)).value, ref, 1e-8 * ref);
}

TEST(Analytic, DapiBenchmarkValueAndModalTerms) {
  const auto p = GridParameters::uniform(5);
  const auto r = dapi_h2(p, spectrum(build_path(5)));
  EXPECT_NEAR(r.modal.z2, 50.0 / 3.0, 1e-13);
  EXPECT_NEAR(r.modal.z1, 269.0 / 6.0, 1e-13);
  EXPECT_EQ(r.modal.terms.size(), 5u);
  EXPECT_NEAR(r.modal.terms[0], 1.0, 1e-15);
  EXPECT_NEAR(r.value, 0.0888431201656, 1e-12);
}

TEST(Analytic, InertiaFreeLimit) {
  auto p = GridParameters::uniform(5);
  p.m.setConstant(1e-6);
  const auto eig = spectrum(build_path(5));
  const double num = h2_norm(assemble_dapi(build_path(5), p)).value;
  EXPECT_NEAR(num, dapi_h2_overdamped(p, eig), 1e-4 * num);
}

TEST(Analytic, HighGainLimit) {
  auto p = GridParameters::uniform(5);
  p.gamma = 1e4;
  const double limit = dapi_h2_highgain(p);
  EXPECT_NEAR(limit, 1.0 / 12.0, 1e-15);
  EXPECT_NEAR(dapi_h2(p, spectrum(build_path(5))).value, limit, 0.01 * limit);
}

TEST(Analytic, GatingAndValidation) {
  auto p = GridParameters::uniform(5);
  p.d[0] = 2.0;
  EXPECT_THROW(broadcast_h2(p), AssumptionError);
  EXPECT_THROW(pd_h2_upper_bound(p), AssumptionError);
  EXPECT_THROW(dapi_h2(p, spectrum(build_path(5))), AssumptionError);
  Eigen::VectorXd bad(2);
  bad << 0.0, -1.0;
  EXPECT_THROW(dapi_h2(GridParameters::uniform(2), bad), ValidationError);
  EXPECT_THROW(dapi_h2(GridParameters::uniform(2), Eigen::VectorXd()), InvalidSizeError);
}
