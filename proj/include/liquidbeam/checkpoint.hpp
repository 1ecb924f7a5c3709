#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "liquidbeam/glnn.hpp"
#include "liquidbeam/io.hpp"

namespace lb {

namespace detail {

inline void append_tensor(std::string& out, const std::string& name, const ComplexMatrix& t) {
  out += "tensor " + name + " " + std::to_string(t.rows()) + " " + std::to_string(t.cols()) +
         "\n";
  for (int part = 0; part < 2; ++part) {
    const auto& data = part == 0 ? t.re_data() : t.im_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (i) out += ' ';
      out += format_double_hex(data[i]);
    }
    out += '\n';
  }
}

}  // namespace detail

/// Named-tensor text checkpoint of a runner's mutable world: base matrix,
/// head parameters, Adam moments and hidden states, plus the step counters.
/// Values are hexadecimal floats, so a load restores them bit-exactly.
inline void save_checkpoint(GlnnRunner& runner, const std::string& path) {
  std::string out = "liquidbeam-checkpoint v1\n";
  detail::append_tensor(out, "X", runner.base_matrix());
  auto refs = param_refs(runner.stack());
  for (const auto& r : refs) detail::append_tensor(out, "stack." + r.name, *r.tensor);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    detail::append_tensor(out, "adam.m." + refs[i].name, runner.adam().m[i]);
    detail::append_tensor(out, "adam.v." + refs[i].name, runner.adam().v[i]);
  }
  for (std::size_t i = 0; i < 3; ++i)
    detail::append_tensor(out, std::string("state.") + LiquidStack::kLayerNames[i],
                          runner.stack().state[i]);
  out += "scalar adam.step " + std::to_string(runner.adam().step) + "\n";
  out += "scalar samples_seen " + std::to_string(runner.samples_seen()) + "\n";
  out += "end\n";
  write_text_file(path, out);
}

/// Restore a checkpoint into a runner built with the same dimensions.
inline void load_checkpoint(GlnnRunner& runner, const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "liquidbeam-checkpoint v1")
    throw ConfigError(path + ": not a liquidbeam checkpoint");

  auto refs = param_refs(runner.stack());
  auto find_target = [&](const std::string& name) -> ComplexMatrix* {
    if (name == "X") return nullptr;  // handled via setter
    for (std::size_t i = 0; i < refs.size(); ++i) {
      if (name == "stack." + refs[i].name) return refs[i].tensor;
      if (name == "adam.m." + refs[i].name) return &runner.adam().m[i];
      if (name == "adam.v." + refs[i].name) return &runner.adam().v[i];
    }
    for (std::size_t i = 0; i < 3; ++i)
      if (name == std::string("state.") + LiquidStack::kLayerNames[i])
        return &runner.stack().state[i];
    throw ConfigError(path + ": unknown tensor '" + name + "'");
  };

  while (std::getline(in, line)) {
    if (line == "end") return;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "scalar") {
      std::string name, value;
      ls >> name >> value;
      if (name == "adam.step")
        runner.adam().step = parse_u64(value);
      else if (name == "samples_seen")
        runner.set_samples_seen(parse_u64(value));
      else
        throw ConfigError(path + ": unknown scalar '" + name + "'");
      continue;
    }
    if (kind != "tensor") throw ConfigError(path + ": unexpected line '" + line + "'");
    std::string name;
    std::size_t rows = 0, cols = 0;
    ls >> name >> rows >> cols;
    ComplexMatrix t(rows, cols);
    for (int part = 0; part < 2; ++part) {
      std::string data_line;
      if (!std::getline(in, data_line)) throw ConfigError(path + ": truncated tensor data");
      std::istringstream ds(data_line);
      auto& data = part == 0 ? t.re_data() : t.im_data();
      std::string tok;
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (!(ds >> tok)) throw ConfigError(path + ": short tensor row for '" + name + "'");
        data[i] = parse_double_hex(tok);
      }
    }
    if (ComplexMatrix* target = find_target(name)) {
      if (!target->same_shape(t))
        throw ConfigError(path + ": shape mismatch for '" + name + "'");
      *target = std::move(t);
    } else {
      runner.set_base_matrix(std::move(t));
    }
  }
  throw ConfigError(path + ": missing end marker");
}

}  // namespace lb
