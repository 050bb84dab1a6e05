#include <doctest.h>

#include <cmath>
#include <cstring>

#include "molflow/errors.hpp"
#include "molflow/logistic.hpp"
#include "molflow/mol.hpp"
#include "test_util.hpp"

using namespace molflow;
using test::quad;
using test::random_mol;

TEST_CASE("logistic_cdf basics") {
  CHECK(logistic_cdf(0.0, Logistic(0.0, 1.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(logistic_cdf(3.7, Logistic(3.7, 0.2)) == doctest::Approx(0.5).epsilon(1e-15));
  // high-precision value of 1/(1+e^-2)
  CHECK(logistic_cdf(2.0, Logistic(0.0, 1.0)) ==
        doctest::Approx(0.880797077977882444).epsilon(1e-14));
  CHECK_THROWS_AS(Logistic(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("logistic_cdf stable in far tails") {
  const Logistic l(0.0, 1.0);
  const double hi = logistic_cdf(700.0, l);
  const double lo = logistic_cdf(-700.0, l);
  CHECK(std::isfinite(hi));
  CHECK(std::isfinite(lo));
  CHECK(hi > 0.0);
  CHECK(hi <= 1.0);
  CHECK(lo >= 0.0);
  CHECK(lo < 1e-300 * 1e10);
  // strictly increasing even at moderate extremes
  CHECK(logistic_cdf(-30.0, l) < logistic_cdf(-29.0, l));
}

TEST_CASE("mol_cdf reduces to single logistic and handles mixtures") {
  MoLParams single({1.0}, {0.0}, {1.0});
  CHECK(mol_cdf(0.0, single) == doctest::Approx(0.5).epsilon(1e-15));

  MoLParams sym({0.5, 0.5}, {-1.3, 1.3}, {0.7, 0.7});
  CHECK(mol_cdf(0.0, sym) == doctest::Approx(0.5).epsilon(1e-14));

  // independently computed: 0.3*sigma(3) + 0.7*sigma(-1.5)
  MoLParams mix({0.3, 0.7}, {-1.0, 2.0}, {0.5, 1.0});
  CHECK(mol_cdf(0.5, mix) == doctest::Approx(0.413470104711179404).epsilon(1e-14));
}

TEST_CASE("MoLParams invariants enforced") {
  CHECK_THROWS_AS(MoLParams({0.5, 0.6}, {0.0, 0.0}, {1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(MoLParams({1.0}, {0.0, 1.0}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(MoLParams({1.0}, {0.0}, {-1.0}), std::invalid_argument);
  CHECK_THROWS_AS(MoLParams({}, {}, {}), std::invalid_argument);
}

TEST_CASE("mol_log_pdf peak values") {
  MoLParams std1({1.0}, {0.0}, {1.0});
  CHECK(mol_log_pdf(0.0, std1) == doctest::Approx(std::log(0.25)).epsilon(1e-14));
  MoLParams s2({1.0}, {0.0}, {2.0});
  CHECK(mol_log_pdf(0.0, s2) == doctest::Approx(std::log(0.125)).epsilon(1e-14));
}

TEST_CASE("mol_log_pdf is the derivative of mol_cdf") {
  Rng rng(101);
  int done = 0;
  while (done < 200) {
    const MoLParams p = random_mol(rng);
    const double u = rng.uniform(-5.0, 5.0);
    const double pdf = std::exp(mol_log_pdf(u, p));
    if (pdf < 1e-4) continue;  // below the resolution of a step-1e-6 oracle
    const double fd = test::central_diff([&](double x) { return mol_cdf(x, p); }, u, 1e-6);
    CHECK(pdf == doctest::Approx(fd).epsilon(1e-5));
    ++done;
  }
  // the spec's example point
  Rng rng2(5);
  const MoLParams p = random_mol(rng2);
  const double fd = test::central_diff([&](double x) { return mol_cdf(x, p); }, 0.7, 1e-6);
  CHECK(std::exp(mol_log_pdf(0.7, p)) == doctest::Approx(fd).epsilon(1e-5));
}

TEST_CASE("mol_log_cdf_pair stays finite and consistent") {
  MoLParams std1({1.0}, {0.0}, {1.0});
  auto [lc0, l1mc0] = mol_log_cdf_pair(0.0, std1);
  CHECK(lc0 == doctest::Approx(std::log(0.5)).epsilon(1e-14));
  CHECK(l1mc0 == doctest::Approx(std::log(0.5)).epsilon(1e-14));

  // ln(1-C) at u=40: analytic tail ln sigma(-40)
  auto [lc40, l1mc40] = mol_log_cdf_pair(40.0, std1);
  CHECK(std::isfinite(l1mc40));
  CHECK(l1mc40 == doctest::Approx(-40.0 - std::log1p(std::exp(-40.0))).epsilon(1e-12));
  CHECK(lc40 < 0.0);

  // deep left tail of a 2-component mixture against a direct oracle
  MoLParams mix({0.4, 0.6}, {-0.5, 1.0}, {0.8, 1.2});
  auto [lc, l1mc] = mol_log_cdf_pair(-30.0, mix);
  const double z1 = (-30.0 + 0.5) / 0.8, z2 = (-30.0 - 1.0) / 1.2;
  const double t1 = std::log(0.4) - softplus(-z1), t2 = std::log(0.6) - softplus(-z2);
  const double m = std::max(t1, t2);
  const double oracle = m + std::log(std::exp(t1 - m) + std::exp(t2 - m));
  CHECK(lc == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(l1mc == doctest::Approx(0.0).epsilon(1e-10));

  SUBCASE("exp(lnC)+exp(ln(1-C)) = 1 across the range") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
      const MoLParams p = random_mol(rng);
      const double u = rng.uniform(-50.0, 50.0);
      auto [a, b] = mol_log_cdf_pair(u, p);
      CHECK(std::exp(a) + std::exp(b) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("mol_quantile inverts the CDF") {
  MoLParams shifted({1.0}, {3.0}, {1.0});
  CHECK(mol_quantile(0.5, shifted, 1e-12) == doctest::Approx(3.0).epsilon(1e-9));

  MoLParams std1({1.0}, {0.0}, {1.0});
  CHECK(mol_quantile(logistic_cdf(2.0, Logistic(0.0, 1.0)), std1, 1e-13) ==
        doctest::Approx(2.0).epsilon(1e-9));

  MoLParams bimodal({0.5, 0.5}, {-1.5, 1.5}, {0.3, 0.3});
  const double u = mol_quantile(0.25, bimodal, 1e-11);
  CHECK(std::abs(mol_cdf(u, bimodal) - 0.25) < 1e-10);

  SUBCASE("round trip over a wide range") {
    MoLParams p({0.6, 0.4}, {-0.7, 0.9}, {0.5, 1.1});
    for (double u0 = -20.0; u0 <= 20.0; u0 += 2.5) {
      const double q = mol_cdf(u0, p);
      CHECK(mol_quantile(q, p, 1e-13) == doctest::Approx(u0).epsilon(1e-8));
    }
  }

  SUBCASE("iteration cap reported as a numerical failure") {
    CHECK_THROWS_AS(mol_quantile(0.3, std1, 1e-13, /*max_iter=*/3), NumericalError);
    CHECK_THROWS_AS(mol_quantile(0.0, std1, 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(mol_quantile(0.5, std1, 0.0), std::invalid_argument);
  }
}

TEST_CASE("mol_cdf strictly increasing") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const MoLParams p = random_mol(rng);
    const double a = rng.uniform(-8.0, 8.0);
    const double b = a + rng.uniform(1e-4, 4.0);
    CHECK(mol_cdf(a, p) < mol_cdf(b, p));
  }
}

TEST_CASE("mol density normalizes to 1") {
  Rng rng(53);
  for (int trial = 0; trial < 5; ++trial) {
    const MoLParams p = random_mol(rng, 4);
    double mu_min = p.mus()[0], mu_max = p.mus()[0], s_max = p.scales()[0];
    for (int i = 0; i < p.size(); ++i) {
      mu_min = std::min(mu_min, p.mus()[i]);
      mu_max = std::max(mu_max, p.mus()[i]);
      s_max = std::max(s_max, p.scales()[i]);
    }
    const double mass = quad([&](double u) { return std::exp(mol_log_pdf(u, p)); },
                             mu_min - 40.0 * s_max, mu_max + 40.0 * s_max, 1e-9);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("sample_logistic moments and determinism") {
  const Logistic l(0.0, 1.0);
  Rng rng(2024);
  const int n = 1'000'000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = sample_logistic(rng, l);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(3.28986813369645287).epsilon(0.02));

  SUBCASE("seeded streams are byte-identical") {
    Rng a(99), b(99);
    for (int i = 0; i < 1000; ++i) {
      const double va = sample_logistic(a, l), vb = sample_logistic(b, l);
      CHECK(std::memcmp(&va, &vb, sizeof va) == 0);
    }
  }
}
