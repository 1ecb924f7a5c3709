#pragma once

#include <span>
#include <string>
#include <vector>

#include "liquidbeam/channel.hpp"
#include "liquidbeam/config.hpp"
#include "liquidbeam/io.hpp"

namespace lb {

/// Read the [scenario] section. Keys mirror the ScenarioConfig fields;
/// pair-valued entries use "x,y" items separated by ';', the phase table
/// uses "speed:slots" items.
inline ScenarioConfig scenario_from_config(const ConfigFile& cfg,
                                           const std::string& section = "scenario") {
  ScenarioConfig s;
  s.tx_antennas = cfg.get_u64(section, "tx_antennas", s.tx_antennas);
  s.num_users = cfg.get_u64(section, "num_users", s.num_users);
  s.rx_antennas_per_user = cfg.get_u64(section, "rx_antennas_per_user", s.rx_antennas_per_user);
  s.carrier_freq_hz = cfg.get_double(section, "carrier_freq_hz", s.carrier_freq_hz);
  s.slot_duration_s = cfg.get_double(section, "slot_duration_s", s.slot_duration_s);
  s.paths_per_user = cfg.get_u64(section, "paths_per_user", s.paths_per_user);
  s.rician_factor_db = cfg.get_double(section, "rician_factor_db", s.rician_factor_db);
  s.seed = cfg.get_u64(section, "seed", s.seed);
  s.scatter_phase_rate_per_m =
      cfg.get_double(section, "scatter_phase_rate_per_m", s.scatter_phase_rate_per_m);
  s.scatter_angle_rate_per_m =
      cfg.get_double(section, "scatter_angle_rate_per_m", s.scatter_angle_rate_per_m);

  if (auto v = cfg.raw(section, "bs_position")) {
    const auto parts = ConfigFile::split(*v, ',');
    if (parts.size() != 2) throw ConfigError("scenario.bs_position: expected 'x,y'");
    s.bs_position = {parse_double(ConfigFile::trim(parts[0])),
                     parse_double(ConfigFile::trim(parts[1]))};
  }
  if (auto v = cfg.raw(section, "user_start_positions")) {
    s.user_start_positions.clear();
    for (const auto& item : ConfigFile::split(*v, ';')) {
      const std::string t = ConfigFile::trim(item);
      if (t.empty()) continue;
      const auto parts = ConfigFile::split(t, ',');
      if (parts.size() != 2)
        throw ConfigError("scenario.user_start_positions: expected 'x,y' items");
      s.user_start_positions.push_back({parse_double(ConfigFile::trim(parts[0])),
                                        parse_double(ConfigFile::trim(parts[1]))});
    }
  }
  if (auto v = cfg.raw(section, "phase_table")) {
    s.phase_table.clear();
    for (const auto& item : ConfigFile::split(*v, ';')) {
      const std::string t = ConfigFile::trim(item);
      if (t.empty()) continue;
      const auto parts = ConfigFile::split(t, ':');
      if (parts.size() != 2)
        throw ConfigError("scenario.phase_table: expected 'speed:slots' items");
      PhaseSpec phase;
      phase.speed_mps = parse_double(ConfigFile::trim(parts[0]));
      phase.slots = parse_u64(ConfigFile::trim(parts[1]));
      s.phase_table.push_back(phase);
    }
  }
  s.validate();
  return s;
}

/// Channel dump for cross-implementation comparison:
/// slot,row,col,re_true,im_true,re_est,im_est.
inline void write_channel_dump(const std::string& path,
                               std::span<const ChannelSample> samples) {
  std::string out = "slot,row,col,re_true,im_true,re_est,im_est\n";
  for (const auto& s : samples) {
    for (std::size_t r = 0; r < s.h_true.rows(); ++r)
      for (std::size_t c = 0; c < s.h_true.cols(); ++c) {
        out += std::to_string(s.slot) + "," + std::to_string(r) + "," + std::to_string(c) +
               "," + format_double(s.h_true.re(r, c)) + "," + format_double(s.h_true.im(r, c)) +
               "," + format_double(s.h_est.re(r, c)) + "," + format_double(s.h_est.im(r, c)) +
               "\n";
      }
  }
  write_text_file(path, out);
}

}  // namespace lb
