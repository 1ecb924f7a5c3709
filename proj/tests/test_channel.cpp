#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "liquidbeam/channel.hpp"
#include "test_support.hpp"

using lb::ComplexMatrix;
using lb::ScenarioConfig;

namespace {

ScenarioConfig small_config() {
  ScenarioConfig cfg;
  cfg.tx_antennas = 16;
  cfg.num_users = 2;
  cfg.rx_antennas_per_user = 2;
  cfg.paths_per_user = 3;
  cfg.phase_table = {{2.0, 200}};
  cfg.seed = 77;
  return cfg;
}

}  // namespace

TEST_CASE("steering vector closed forms", "[channel]") {
  auto a = lb::steering_vector(4, 0.0);
  for (std::size_t m = 0; m < 4; ++m) {
    CHECK(a.re(m, 0) == Catch::Approx(0.5).margin(1e-15));
    CHECK(a.im(m, 0) == Catch::Approx(0.0).margin(1e-15));
  }

  auto b = lb::steering_vector(2, lb::CounterRng::kPi / 2.0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(b.re(0, 0) == Catch::Approx(inv_sqrt2).margin(1e-12));
  CHECK(b.re(1, 0) == Catch::Approx(-inv_sqrt2).margin(1e-12));
  CHECK(std::abs(b.im(1, 0)) < 1e-12);

  lb::CounterRng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto v = lb::steering_vector(1 + rng.next_u64() % 64, rng.uniform(-1.5, 1.5));
    CHECK(lb::frobenius_norm(v) == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("generate_sample is deterministic in (cfg, slot)", "[channel]") {
  auto cfg = small_config();
  auto a = lb::generate_sample(cfg, 13);
  auto b = lb::generate_sample(cfg, 13);
  CHECK(lb::max_abs_diff(a.h_true, b.h_true) == 0.0);
}

TEST_CASE("zero speed freezes the channel", "[channel]") {
  auto cfg = small_config();
  cfg.phase_table = {{0.0, 50}};
  auto first = lb::generate_sample(cfg, 0);
  for (std::size_t slot : {1u, 17u, 49u})
    CHECK(lb::max_abs_diff(lb::generate_sample(cfg, slot).h_true, first.h_true) == 0.0);
}

TEST_CASE("single path gives rank-one user blocks", "[channel]") {
  auto cfg = small_config();
  cfg.paths_per_user = 1;
  auto s = lb::generate_sample(cfg, 5);
  // Every 2x2 minor of each user's 2 x M block must vanish.
  for (std::size_t user = 0; user < cfg.num_users; ++user) {
    const std::size_t r0 = user * 2, r1 = r0 + 1;
    for (std::size_t i = 0; i < cfg.tx_antennas; ++i)
      for (std::size_t j = i + 1; j < cfg.tx_antennas; ++j) {
        const auto det = s.h_true.at(r0, i) * s.h_true.at(r1, j) -
                         s.h_true.at(r0, j) * s.h_true.at(r1, i);
        CHECK(std::abs(det) < 1e-12);
      }
  }
}

TEST_CASE("user blocks are independent of the other users", "[channel][property]") {
  ScenarioConfig three = small_config();
  three.tx_antennas = 16;
  three.num_users = 3;
  three.user_start_positions = {{30, 0}, {25, 12}, {28, -9}};

  ScenarioConfig two = three;
  two.num_users = 2;
  two.user_start_positions = {{30, 0}, {25, 12}};

  auto h3 = lb::generate_sample(three, 21).h_true;
  auto h2 = lb::generate_sample(two, 21).h_true;
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 16; ++c) CHECK(h3.at(r, c) == h2.at(r, c));
}

TEST_CASE("per-slot channel change grows with speed", "[channel][property]") {
  const std::vector<double> speeds{0.0, 2.0, 6.0, 15.0, 30.0};
  std::vector<double> mean_change;
  for (double v : speeds) {
    auto cfg = small_config();
    cfg.phase_table = {{v, 101}};
    double acc = 0.0;
    auto prev = lb::generate_sample(cfg, 0).h_true;
    for (std::size_t slot = 1; slot <= 100; ++slot) {
      auto cur = lb::generate_sample(cfg, slot).h_true;
      acc += lb::frobenius_norm(lb::subtract(cur, prev)) / lb::frobenius_norm(prev);
      prev = cur;
    }
    mean_change.push_back(acc / 100.0);
  }
  for (std::size_t i = 1; i < mean_change.size(); ++i)
    CHECK(mean_change[i] >= mean_change[i - 1]);
}

TEST_CASE("slot beyond scenario length is rejected", "[channel]") {
  auto cfg = small_config();
  CHECK_THROWS_AS(lb::generate_sample(cfg, cfg.total_slots()), lb::ContractViolation);
}

TEST_CASE("inject_cee hits the target exactly", "[channel]") {
  lb::CounterRng rng(31);
  ComplexMatrix h = lbtest::random_complex(rng, 4, 8);

  SECTION("0 dB error has the channel's own norm") {
    lb::CounterRng r2(32);
    auto est = lb::inject_cee(h, 0.0, r2);
    const double ratio = lb::frobenius_norm(lb::subtract(est, h)) / lb::frobenius_norm(h);
    CHECK(ratio == Catch::Approx(1.0).epsilon(1e-12));
  }

  SECTION("measured CEE equals the target within 1e-9 dB across targets and seeds") {
    for (double target : {-20.0, -15.0, -10.0, -5.0, 0.0}) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        lb::CounterRng r2 = lb::CounterRng::keyed(seed, 4, 2);
        auto est = lb::inject_cee(h, target, r2);
        CHECK(lb::measure_cee(h, est) == Catch::Approx(target).margin(1e-9));
      }
    }
  }

  SECTION("zero channel is degenerate") {
    lb::CounterRng r2(33);
    CHECK_THROWS_AS(lb::inject_cee(ComplexMatrix(2, 2), -10.0, r2), lb::DegenerateInputError);
  }
}

TEST_CASE("make_sample wires the estimation path", "[channel]") {
  auto cfg = small_config();

  auto perfect = lb::make_sample(cfg, 3, std::nullopt);
  CHECK(lb::max_abs_diff(perfect.h_true, perfect.h_est) == 0.0);
  CHECK_FALSE(perfect.cee_target_db.has_value());

  auto noisy = lb::make_sample(cfg, 3, -10.0);
  CHECK(lb::measure_cee(noisy.h_true, noisy.h_est) == Catch::Approx(-10.0).margin(1e-9));
  CHECK(lb::max_abs_diff(noisy.h_true, perfect.h_true) == 0.0);

  // Different slots draw different error realizations.
  auto other = lb::make_sample(cfg, 4, -10.0);
  CHECK(lb::max_abs_diff(lb::subtract(noisy.h_est, noisy.h_true),
                         lb::subtract(other.h_est, other.h_true)) > 1e-6);
}
