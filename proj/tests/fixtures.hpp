#pragma once

// Shared simulated datasets and models. Built once per test binary.

#include <filesystem>
#include <random>
#include <string>

#include "sxai/sxai.hpp"

namespace fixtures {

inline constexpr std::uint64_t kSeed = 42;
inline constexpr std::uint64_t kTrialSeed = 4242;

inline const sxai::Dataset& clean_data() {
  static const auto d = sxai::to_dataset(sxai::simulate(sxai::preset("paper-scale", kSeed)));
  return d;
}

inline sxai::SimConfig ambiguous_config() {
  auto c = sxai::preset("paper-scale", kSeed);
  c.ambiguity_rate = 0.05;
  return c;
}

inline const sxai::Dataset& ambiguous_data() {
  static const auto d = sxai::to_dataset(sxai::simulate(ambiguous_config()));
  return d;
}

inline const sxai::Dataset& trial_data() {
  static const auto d = sxai::to_dataset(sxai::simulate(sxai::preset("trial", kTrialSeed)));
  return d;
}

inline const sxai::ModelFile& clean_tree() {
  static const auto m = sxai::build_model_file(clean_data(), sxai::TreeParams{8, 15});
  return m;
}

inline const sxai::ModelFile& ambiguous_tree() {
  static const auto m = sxai::build_model_file(ambiguous_data(), sxai::TreeParams{8, 15});
  return m;
}

inline sxai::VehicleState state(bool ready, sxai::Objective obj, sxai::Progress prog, bool same,
                                bool obstacle) {
  return {ready, obj, prog, same, obstacle};
}

/// Dataset with one row per given (state, label) pair.
inline sxai::Dataset make_dataset(const std::vector<std::pair<sxai::VehicleState, sxai::Behaviour>>& rows) {
  sxai::Dataset d;
  std::int64_t tick = 0;
  for (const auto& [s, b] : rows) {
    d.features.push_back(sxai::encode(s));
    d.labels.push_back(static_cast<std::uint8_t>(sxai::code_of(b)));
    d.vessels.emplace_back("heron");
    d.ticks.push_back(tick++);
  }
  return d;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("sxai-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fixtures
