#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "granular/ensemble.hpp"
#include "granular/experiments.hpp"
#include "granular/scheme.hpp"

namespace granular::io {

/// "%.17g": round-trips every double.
std::string format_double(double x);

/// Writes to a sibling temporary file, then renames it over `path`.
/// Creates missing parent directories. Throws std::runtime_error.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string run_record_json(const RunRecord& record);

/// Columns: sweep_value, replication, w2, w2_squared, seed, wall_ms.
std::string sweep_csv(const SweepRecord& record);
/// Slope, intercept, reference description and per-point means.
std::string sweep_summary_json(const SweepRecord& record);

/// Header "x0,...,x{d-1}", one particle per row.
std::string particles_csv(std::span<const double> positions, std::size_t dim);

struct PointCloud {
  std::vector<double> data;
  std::size_t dim = 0;
  PointSetView view() const { return {data, dim}; }
};

/// Reads a particle CSV. The header row is optional. Throws ConfigError on
/// ragged rows, unparsable cells or an empty file.
PointCloud read_particles_csv(const std::filesystem::path& path);

std::string w2_report_json(const W2Report& report);

/// Catalog listing with potentials, metadata and default mixtures.
std::string models_json();
std::string models_table();

}  // namespace granular::io
