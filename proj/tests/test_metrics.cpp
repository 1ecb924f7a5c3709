#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "liquidbeam/metrics.hpp"
#include "test_support.hpp"

using lb::ComplexMatrix;

namespace {

// Random 2x2 unitary from a normalized complex Givens rotation.
ComplexMatrix random_unitary_2x2(lb::CounterRng& rng) {
  std::complex<double> a = rng.complex_normal();
  std::complex<double> b = rng.complex_normal();
  const double n = std::sqrt(std::norm(a) + std::norm(b));
  a /= n;
  b /= n;
  ComplexMatrix q(2, 2);
  q.set(0, 0, a);
  q.set(0, 1, b);
  q.set(1, 0, -std::conj(b));
  q.set(1, 1, std::conj(a));
  return q;
}

}  // namespace

TEST_CASE("user_rate on the scalar SNR channel", "[metrics]") {
  ComplexMatrix h(1, 1), w(1, 1);
  h.re(0, 0) = 1.0;
  w.re(0, 0) = std::sqrt(10.0);
  CHECK(lb::user_rate(h, w, 0, 1.0) == Catch::Approx(std::log2(11.0)).epsilon(1e-12));
}

TEST_CASE("user_rate is zero for a zero own precoder", "[metrics]") {
  lb::CounterRng rng(5);
  ComplexMatrix h = lbtest::random_complex(rng, 2, 4);
  ComplexMatrix w = lbtest::random_complex(rng, 4, 3);
  for (std::size_t i = 0; i < 4; ++i) w.set(i, 1, {0.0, 0.0});
  CHECK(lb::user_rate(h, w, 1, 1.0) == 0.0);
}

TEST_CASE("user_rate matches the scalar SINR oracle for single-antenna users",
          "[metrics][oracle]") {
  lb::CounterRng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 2 + rng.next_u64() % 5;
    const std::size_t k_users = 2 + rng.next_u64() % 3;
    ComplexMatrix h = lbtest::random_complex(rng, 1, m);  // one user's row
    ComplexMatrix w = lbtest::random_complex(rng, m, k_users);
    const double sigma2 = 0.3 + rng.next_double();
    const std::size_t k = rng.next_u64() % k_users;

    // Independent oracle: log2(1 + |h w_k|^2 / (sum_{j!=k} |h w_j|^2 + sigma^2)).
    auto dot = [&](std::size_t j) {
      std::complex<double> s{0.0, 0.0};
      for (std::size_t i = 0; i < m; ++i) s += h.at(0, i) * w.at(i, j);
      return std::norm(s);
    };
    double interference = sigma2;
    for (std::size_t j = 0; j < k_users; ++j)
      if (j != k) interference += dot(j);
    const double oracle = std::log2(1.0 + dot(k) / interference);

    CHECK(lb::user_rate(h, w, k, sigma2) == Catch::Approx(oracle).margin(1e-9));
  }
}

TEST_CASE("user_rate requires positive noise power", "[metrics]") {
  ComplexMatrix h(1, 1), w(1, 1);
  h.re(0, 0) = 1.0;
  w.re(0, 0) = 1.0;
  CHECK_THROWS_AS(lb::user_rate(h, w, 0, 0.0), lb::ContractViolation);
}

TEST_CASE("sum_se accumulates weighted per-user rates", "[metrics]") {
  lb::CounterRng rng(9);
  ComplexMatrix h = lbtest::random_complex(rng, 4, 8);
  ComplexMatrix w = lbtest::random_complex(rng, 8, 2);
  const std::vector<double> weights{1.5, 0.5};
  auto report = lb::sum_se(h, w, weights, 1.0);

  REQUIRE(report.per_user.size() == 2);
  double total = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(report.per_user[k] >= 0.0);
    total += weights[k] * report.per_user[k];
  }
  CHECK(report.total == Catch::Approx(total).margin(1e-12));

  ComplexMatrix zero(8, 2);
  CHECK(lb::sum_se(h, zero, weights, 1.0).total == 0.0);
}

TEST_CASE("permuting users permutes per-user rates and preserves the total",
          "[metrics][property]") {
  lb::CounterRng rng(10);
  const std::size_t m = 6, k_users = 3, n_k = 2;
  ComplexMatrix h = lbtest::random_complex(rng, k_users * n_k, m);
  ComplexMatrix w = lbtest::random_complex(rng, m, k_users);
  const std::vector<double> weights{1.0, 1.0, 1.0};

  // Swap users 0 and 2 (row blocks of H, columns of W).
  ComplexMatrix hp = h, wp = w;
  for (std::size_t r = 0; r < n_k; ++r)
    for (std::size_t c = 0; c < m; ++c) {
      hp.set(r, c, h.at(2 * n_k + r, c));
      hp.set(2 * n_k + r, c, h.at(r, c));
    }
  for (std::size_t r = 0; r < m; ++r) {
    wp.set(r, 0, w.at(r, 2));
    wp.set(r, 2, w.at(r, 0));
  }

  auto a = lb::sum_se(h, w, weights, 0.7);
  auto b = lb::sum_se(hp, wp, weights, 0.7);
  CHECK(a.per_user[0] == Catch::Approx(b.per_user[2]).margin(1e-12));
  CHECK(a.per_user[2] == Catch::Approx(b.per_user[0]).margin(1e-12));
  CHECK(a.per_user[1] == Catch::Approx(b.per_user[1]).margin(1e-12));
  CHECK(a.total == Catch::Approx(b.total).margin(1e-11));
}

TEST_CASE("rate is invariant under unitary receive rotation", "[metrics][property]") {
  lb::CounterRng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    ComplexMatrix h = lbtest::random_complex(rng, 2, 6);
    ComplexMatrix w = lbtest::random_complex(rng, 6, 3);
    ComplexMatrix q = random_unitary_2x2(rng);
    const double r0 = lb::user_rate(h, w, 0, 1.0);
    const double r1 = lb::user_rate(lb::matmul(q, h), w, 0, 1.0);
    CHECK(r0 == Catch::Approx(r1).margin(1e-9));
  }
}

TEST_CASE("own-signal scaling never decreases the rate", "[metrics][property]") {
  lb::CounterRng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    ComplexMatrix h = lbtest::random_complex(rng, 2, 5);
    ComplexMatrix w = lbtest::random_complex(rng, 5, 3);
    const double c = 1.0 + 3.0 * rng.next_double();
    ComplexMatrix w2 = w;
    for (std::size_t i = 0; i < 5; ++i) w2.set(i, 0, c * w.at(i, 0));
    CHECK(lb::user_rate(h, w2, 0, 1.0) >= lb::user_rate(h, w, 0, 1.0) - 1e-12);
  }
}

TEST_CASE("loss arithmetic from the worked examples", "[metrics]") {
  lb::LossParams p;
  p.beta = 0.3;
  p.gamma = 0.7;
  p.lambda = 2.5;
  p.num_users = 4;

  lb::RateReport even;
  even.per_user = {3, 3, 3, 3};
  even.total = 12;
  CHECK(lb::loss(even, p) == Catch::Approx(-12.0).margin(1e-12));

  lb::RateReport uneven;
  uneven.per_user = {1, 1, 3, 3};
  uneven.total = 8;
  CHECK(lb::loss(uneven, p) == Catch::Approx(-6.3).margin(1e-12));

  lb::LossParams plain = p;
  plain.beta = 0.0;
  plain.gamma = 0.0;
  CHECK(lb::loss(uneven, plain) == -uneven.total);
}

TEST_CASE("measure_cee from the worked examples", "[metrics]") {
  lb::CounterRng rng(13);
  ComplexMatrix h = lbtest::random_complex(rng, 3, 4);
  CHECK(std::isinf(lb::measure_cee(h, h)));
  CHECK(lb::measure_cee(h, h) < 0);
  CHECK(lb::measure_cee(h, lb::scale(h, 2.0)) == Catch::Approx(0.0).margin(1e-12));
  CHECK(lb::measure_cee(h, lb::scale(h, 1.1)) == Catch::Approx(-20.0).margin(1e-9));
  CHECK_THROWS_AS(lb::measure_cee(ComplexMatrix(2, 2), h.empty() ? h : ComplexMatrix(2, 2)),
                  lb::DegenerateInputError);
}

TEST_CASE("graph forward pass reproduces the plain metrics exactly", "[metrics][autodiff]") {
  lb::CounterRng rng(14);
  const std::size_t m = 8, k_users = 3, n_k = 2;
  ComplexMatrix h = lbtest::random_complex(rng, k_users * n_k, m);
  ComplexMatrix w = lbtest::random_complex(rng, m, k_users);
  const std::vector<double> weights{1.0, 2.0, 0.5};
  const double sigma2 = 0.8;

  lb::LossParams p;
  p.beta = 0.3;
  p.gamma = 0.7;
  p.lambda = 2.5;
  p.num_users = k_users;

  auto report = lb::sum_se(h, w, weights, sigma2);
  const double plain_loss = lb::loss(report, p);

  lb::Graph g;
  auto wid = g.constant(w);
  auto rates = lb::build_sum_se_graph(g, h, wid, weights, sigma2);
  auto loss_id = lb::build_loss_graph(g, rates, p);

  for (std::size_t k = 0; k < k_users; ++k)
    CHECK(std::abs(g.value(rates.per_user[k]).re(0, 0) - report.per_user[k]) < 1e-12);
  CHECK(std::abs(g.value(rates.total).re(0, 0) - report.total) < 1e-12);
  CHECK(std::abs(g.value(loss_id).re(0, 0) - plain_loss) < 1e-12);
}
