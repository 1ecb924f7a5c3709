#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "liquidbeam/complex_matrix.hpp"
#include "liquidbeam/errors.hpp"
#include "liquidbeam/metrics.hpp"
#include "liquidbeam/rng.hpp"

namespace lb {

/// One segment of piecewise-constant user speed.
struct PhaseSpec {
  double speed_mps = 0.0;
  std::size_t slots = 1;
};

/// Geometry and dimensioning of a synthetic downlink scenario. Users move
/// along straight trajectories; each user's channel is a LoS-dominant sum of
/// `paths_per_user` rays whose scatter components drift with travelled
/// distance.
struct ScenarioConfig {
  std::size_t tx_antennas = 64;          // M
  std::size_t num_users = 4;             // K
  std::size_t rx_antennas_per_user = 2;  // N_k
  double carrier_freq_hz = 28e9;
  double slot_duration_s = 1e-3;
  std::size_t paths_per_user = 3;
  double rician_factor_db = 10.0;
  std::array<double, 2> bs_position{0.0, 0.0};
  std::vector<std::array<double, 2>> user_start_positions;  // empty: auto arc
  std::vector<PhaseSpec> phase_table{{1.0, 1000}};
  std::uint64_t seed = 1;

  // Drift of the scatter geometry per metre travelled. The phase rate keeps
  // per-slot decorrelation inside the monotone-in-speed regime for the
  // speeds under study; both are overridable.
  double scatter_phase_rate_per_m = 25.0;
  double scatter_angle_rate_per_m = 0.5;

  std::size_t total_rx() const { return num_users * rx_antennas_per_user; }

  std::size_t total_slots() const {
    std::size_t s = 0;
    for (const auto& p : phase_table) s += p.slots;
    return s;
  }

  void validate() const {
    if (tx_antennas < total_rx())
      throw ConfigError("scenario: tx_antennas (" + std::to_string(tx_antennas) +
                        ") must be >= num_users * rx_antennas_per_user (" +
                        std::to_string(total_rx()) + ")");
    if (num_users == 0 || rx_antennas_per_user == 0 || paths_per_user == 0)
      throw ConfigError("scenario: counts must be positive");
    if (phase_table.empty()) throw ConfigError("scenario: phase_table must be non-empty");
    for (const auto& p : phase_table) {
      if (p.slots < 1) throw ConfigError("scenario: phase slot counts must be >= 1");
      if (p.speed_mps < 0.0) throw ConfigError("scenario: speeds must be >= 0");
    }
    if (!user_start_positions.empty() && user_start_positions.size() != num_users)
      throw ConfigError("scenario: user_start_positions must list every user");
    if (!(slot_duration_s > 0.0)) throw ConfigError("scenario: slot_duration must be > 0");
  }

  /// Start position of user k; defaults to an arc 60 m in front of the BS.
  std::array<double, 2> start_position(std::size_t user) const {
    if (!user_start_positions.empty()) return user_start_positions[user];
    const double radius = 60.0;
    const double span = 100.0 * CounterRng::kPi / 180.0;
    const double frac = num_users == 1
                            ? 0.5
                            : static_cast<double>(user) / static_cast<double>(num_users - 1);
    const double az = -span / 2.0 + span * frac;
    return {bs_position[0] + radius * std::cos(az), bs_position[1] + radius * std::sin(az)};
  }

  /// Speed during `slot` and distance travelled up to its start.
  std::pair<double, double> speed_and_distance(std::size_t slot) const {
    double dist = 0.0;
    std::size_t begin = 0;
    for (const auto& p : phase_table) {
      if (slot < begin + p.slots) {
        dist += p.speed_mps * static_cast<double>(slot - begin) * slot_duration_s;
        return {p.speed_mps, dist};
      }
      dist += p.speed_mps * static_cast<double>(p.slots) * slot_duration_s;
      begin += p.slots;
    }
    throw ContractViolation("scenario: slot " + std::to_string(slot) +
                            " beyond total length " + std::to_string(total_slots()));
  }
};

/// True and estimated channel for one slot. Rows are grouped contiguously
/// per user: user k owns rows [k*N_k, (k+1)*N_k).
struct ChannelSample {
  std::size_t slot = 0;
  ComplexMatrix h_true;
  ComplexMatrix h_est;
  std::optional<double> cee_target_db;  // nullopt: perfect CSI
};

/// Unit-norm ULA steering vector with half-wavelength spacing:
/// element m = exp(i pi m sin(angle)) / sqrt(antennas).
inline ComplexMatrix steering_vector(std::size_t antennas, double angle_rad) {
  ComplexMatrix a(antennas, 1);
  const double norm = 1.0 / std::sqrt(static_cast<double>(antennas));
  const double s = std::sin(angle_rad);
  for (std::size_t m = 0; m < antennas; ++m) {
    const double phase = CounterRng::kPi * static_cast<double>(m) * s;
    a.re(m, 0) = norm * std::cos(phase);
    a.im(m, 0) = norm * std::sin(phase);
  }
  return a;
}

namespace detail {

// Slot-independent per-path randomness is drawn from a reserved key so any
// slot remains reproducible in isolation.
inline constexpr std::uint64_t kStaticGeometrySlot = UINT64_MAX;
inline constexpr std::uint64_t kCeeUserKey = UINT64_MAX - 1;

struct PathSetup {
  double heading_rad;           // user trajectory direction
  std::vector<double> aod_base;
  std::vector<double> aoa_base;
  std::vector<double> aod_rate;   // rad per metre travelled
  std::vector<double> aoa_rate;
  std::vector<double> phase_base;
  std::vector<double> phase_rate;  // rad per metre travelled
  std::vector<std::complex<double>> gain;  // scatter gains, CN(0, power)
};

inline PathSetup draw_path_setup(const ScenarioConfig& cfg, std::size_t user) {
  CounterRng rng = CounterRng::keyed(cfg.seed, kStaticGeometrySlot, user);
  PathSetup p;
  p.heading_rad = rng.uniform(0.0, 2.0 * CounterRng::kPi);
  const std::size_t scatter = cfg.paths_per_user - 1;
  const double kappa = db_to_linear(cfg.rician_factor_db);
  const double scatter_power =
      scatter == 0 ? 0.0 : (1.0 / (kappa + 1.0)) / static_cast<double>(scatter);
  for (std::size_t l = 0; l < scatter; ++l) {
    p.aod_base.push_back(rng.uniform(-0.45 * CounterRng::kPi, 0.45 * CounterRng::kPi));
    p.aoa_base.push_back(rng.uniform(-0.45 * CounterRng::kPi, 0.45 * CounterRng::kPi));
    p.aod_rate.push_back(rng.uniform(-cfg.scatter_angle_rate_per_m,
                                     cfg.scatter_angle_rate_per_m));
    p.aoa_rate.push_back(rng.uniform(-cfg.scatter_angle_rate_per_m,
                                     cfg.scatter_angle_rate_per_m));
    p.phase_base.push_back(rng.uniform(0.0, 2.0 * CounterRng::kPi));
    p.phase_rate.push_back(rng.uniform(-cfg.scatter_phase_rate_per_m,
                                       cfg.scatter_phase_rate_per_m));
    const auto z = rng.complex_normal();
    p.gain.push_back(std::sqrt(scatter_power) * z);
  }
  return p;
}

}  // namespace detail

/// Synthesize the true channel for one slot. Pure in (cfg, slot): safe to
/// call concurrently for different slots.
inline ChannelSample generate_sample(const ScenarioConfig& cfg, std::size_t slot) {
  cfg.validate();
  const auto [speed, distance] = cfg.speed_and_distance(slot);
  (void)speed;

  const std::size_t n_k = cfg.rx_antennas_per_user;
  const std::size_t m = cfg.tx_antennas;
  ComplexMatrix h(cfg.total_rx(), m);

  const double kappa = db_to_linear(cfg.rician_factor_db);
  const double los_amp = cfg.paths_per_user == 1 ? 1.0 : std::sqrt(kappa / (kappa + 1.0));
  const double path_scale = std::sqrt(static_cast<double>(m * n_k));

  for (std::size_t user = 0; user < cfg.num_users; ++user) {
    const detail::PathSetup setup = detail::draw_path_setup(cfg, user);
    const auto start = cfg.start_position(user);
    const double px = start[0] + distance * std::cos(setup.heading_rad);
    const double py = start[1] + distance * std::sin(setup.heading_rad);
    const double dx = px - cfg.bs_position[0];
    const double dy = py - cfg.bs_position[1];

    ComplexMatrix h_k(n_k, m);
    auto add_ray = [&](std::complex<double> gain, double aod, double aoa) {
      const ComplexMatrix at = steering_vector(m, aod);
      const ComplexMatrix ar = steering_vector(n_k, aoa);
      ComplexMatrix ray = matmul(ar, hermitian(at));
      ray = scale(ray, gain * path_scale);
      h_k = add(h_k, ray);
    };

    // LoS ray: departure/arrival from the current geometry, phase referenced
    // to the direct path.
    add_ray(los_amp, std::atan2(dy, dx), std::atan2(-dy, -dx));

    for (std::size_t l = 0; l + 1 < cfg.paths_per_user; ++l) {
      const double phase = setup.phase_base[l] + setup.phase_rate[l] * distance;
      const std::complex<double> rot{std::cos(phase), std::sin(phase)};
      add_ray(setup.gain[l] * rot, setup.aod_base[l] + setup.aod_rate[l] * distance,
              setup.aoa_base[l] + setup.aoa_rate[l] * distance);
    }

    for (std::size_t i = 0; i < n_k; ++i)
      for (std::size_t j = 0; j < m; ++j)
        h.set(user * n_k + i, j, h_k.at(i, j));
  }

  ChannelSample sample;
  sample.slot = slot;
  sample.h_true = h;
  sample.h_est = std::move(h);
  return sample;
}

/// Estimated channel with i.i.d. complex Gaussian error scaled so that the
/// per-sample ratio ||H_est - H||_F^2 / ||H||_F^2 is exactly 10^(target/10).
inline ComplexMatrix inject_cee(const ComplexMatrix& h, double target_db, CounterRng& rng) {
  const double h_norm = frobenius_norm(h);
  if (h_norm == 0.0) throw DegenerateInputError("inject_cee: channel is zero");
  ComplexMatrix g = rng.complex_gaussian_matrix(h.rows(), h.cols());
  const double g_norm = frobenius_norm(g);
  const double s = std::sqrt(db_to_linear(target_db)) * (h_norm / g_norm);
  return add(h, scale(g, s));
}

/// generate_sample plus optional estimation error at an exact CEE level.
inline ChannelSample make_sample(const ScenarioConfig& cfg, std::size_t slot,
                                 std::optional<double> cee_target_db) {
  ChannelSample sample = generate_sample(cfg, slot);
  sample.cee_target_db = cee_target_db;
  if (cee_target_db.has_value()) {
    CounterRng rng = CounterRng::keyed(cfg.seed, slot, detail::kCeeUserKey);
    sample.h_est = inject_cee(sample.h_true, *cee_target_db, rng);
  }
  return sample;
}

}  // namespace lb
