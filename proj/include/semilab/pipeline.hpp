#pragma once

#include <string>
#include <vector>

#include "semilab/io.hpp"

namespace semilab {

inline constexpr const char *kSemilabVersion = "0.1.0";

struct TaskRecord {
  std::string name;
  bool ok = true;
  std::string error;
  double seconds = 0.0;
  std::vector<std::string> files; // relative to the output directory
  std::vector<std::string> notes;
};

struct PipelineResult {
  std::string output_dir;
  std::string manifest_path;
  std::vector<TaskRecord> tasks;
  bool failed = false;
};

/// Runs the configured tasks (restricted to `only` when nonempty) for every
/// h, writes one CSV (or PGM set) per task and manifest.json last. A task
/// that throws is recorded as failed; the others still run. Outputs other
/// than the manifest depend only on the config.
PipelineResult run_pipeline(const ExperimentConfig &cfg, const std::vector<std::string> &only = {});

} // namespace semilab
