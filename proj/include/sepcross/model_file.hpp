#pragma once

// TOML model files: the system plus saddle seed, sections and run defaults.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "sepcross/model.hpp"
#include "sepcross/portrait.hpp"

namespace sepcross {

struct RunDefaults {
  std::vector<double> z0;
  double h_init = 0.3;
  std::vector<double> eps{1e-3};
  std::size_t phases = 8;
  std::optional<std::uint64_t> seed;
  double k_window = 3.0;
  double pre_lo = 0.05, pre_hi = 0.2;
  std::optional<double> post_lo, post_hi;
  double rtol = 1e-12, atol = 1e-14;
  double t_end = 1e6;
};

struct ModelFile {
  std::string path;
  ModelConfig model;
  SystemPtr sys;
  Vec2 saddle_seed;
  SectionConfig sections;
  RunDefaults run;

  // Everything above as resolved values, for echoing into outputs.
  nlohmann::json resolved() const;
};

// Both throw Error(config) on unreadable files, bad TOML and unknown keys.
ModelFile load_model_file(const std::string& path);
ModelFile parse_model_file(std::string_view text, const std::string& label = "<string>");

}  // namespace sepcross
