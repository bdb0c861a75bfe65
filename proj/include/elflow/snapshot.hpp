#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "elflow/field.hpp"

namespace elflow {

/// Field snapshot file: a single-line JSON header
///   {"dim":..,"n":..,"L":..,"components":..,"time":..,"name":..}
/// terminated by '\n', followed by little-endian float64 values, row-major over
/// (component, x1, x2[, x3]).
struct Snapshot {
  int dim = 0;
  int n = 0;
  double L = 0.0;
  int components = 0;
  double time = 0.0;
  std::string name;
  std::vector<Eigen::ArrayXd> data;

  Grid grid() const { return Grid(dim, n, L); }
};

template <int Rank>
Snapshot make_snapshot(const TensorField<Rank>& f, const std::string& name, double time) {
  Snapshot s;
  s.dim = f.grid().dim();
  s.n = f.grid().n();
  s.L = f.grid().length();
  s.components = f.size();
  s.time = time;
  s.name = name;
  for (int c = 0; c < f.size(); ++c) s.data.push_back(f[c]);
  return s;
}

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap);
Snapshot read_snapshot(const std::filesystem::path& path);

/// Interprets a snapshot with dim components as a vector field.
VectorField snapshot_to_vector(const Snapshot& snap);

}  // namespace elflow
