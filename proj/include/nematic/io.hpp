/// @file io.hpp
/// @brief Artifact files: CSV at 17 significant digits, legacy VTK snapshots and control CSV.
///
/// Every file is written to `<path>.tmp` and renamed into place, so a failed run never
/// leaves a partially written artifact behind.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nematic/control.hpp"
#include "nematic/state.hpp"

namespace nematic {

namespace fs = std::filesystem;

/// Shortest-to-read exact text of a double: 17 significant digits round-trip bit for bit.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& context) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(context + ": '" + s + "' is not a number");
  }
  NEMATIC_REQUIRE(used == s.size(), ConfigError, context + ": '" + s + "' is not a number");
  return x;
}

inline void atomic_write(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    NEMATIC_REQUIRE(out, Error, "cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    NEMATIC_REQUIRE(out, Error, "write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  NEMATIC_REQUIRE(in, ConfigError, "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Header plus numeric rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) {
    NEMATIC_REQUIRE(row.size() == header.size(), Error, "csv: row width does not match the header");
    rows.push_back(std::move(row));
  }

  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
    s += '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + format_double(r[i]);
      s += '\n';
    }
    return s;
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ConfigError("csv: no column named " + name);
  }
};

inline CsvTable parse_csv(const std::string& text, const std::string& origin) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ls(l);
    while (std::getline(ls, cell, ',')) out.push_back(cell);
    return out;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    const auto cells = split(line);
    const std::string ctx = origin + ":" + std::to_string(lineno);
    NEMATIC_REQUIRE(cells.size() == t.header.size(), ConfigError, ctx + ": expected " + std::to_string(t.header.size()) + " columns");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(c, ctx));
    t.rows.push_back(std::move(row));
  }
  NEMATIC_REQUIRE(!t.header.empty(), ConfigError, origin + ": empty csv");
  return t;
}

// ---- legacy VTK ---------------------------------------------------------------

namespace detail {

inline std::string vtk_header(const GridSpec& g, const std::string& title) {
  std::string s = "# vtk DataFile Version 3.0\n" + title + "\nASCII\nDATASET STRUCTURED_POINTS\n";
  s += "DIMENSIONS " + std::to_string(g.nx) + " " + std::to_string(g.ny) + " 1\n";
  s += "ORIGIN " + format_double(0.5 * g.hx()) + " " + format_double(0.5 * g.hy()) + " 0\n";
  s += "SPACING " + format_double(g.hx()) + " " + format_double(g.hy()) + " 1\n";
  s += "POINT_DATA " + std::to_string(g.num_cells()) + "\n";
  return s;
}

}  // namespace detail

/// Cell-centred scalar as SCALARS.
inline std::string vtk_scalar(const GridSpec& g, const std::string& name, const Vec& values) {
  std::string s = detail::vtk_header(g, name) + "SCALARS " + name + " double 1\nLOOKUP_TABLE default\n";
  for (int c = 0; c < g.num_cells(); ++c) s += format_double(values[c]) + "\n";
  return s;
}

/// Cell-centred vectors (2 or 3 components, padded to 3) as VECTORS.
inline std::string vtk_vectors(const GridSpec& g, const std::string& name, const Mat& values) {
  std::string s = detail::vtk_header(g, name) + "VECTORS " + name + " double\n";
  for (int c = 0; c < g.num_cells(); ++c) {
    for (int k = 0; k < 3; ++k) s += (k ? " " : "") + format_double(k < values.cols() ? values(c, k) : 0.0);
    s += "\n";
  }
  return s;
}

/// Face velocities averaged to cell centres.
inline Mat cell_velocity(const VectorField2D& w) {
  const GridSpec& g = w.grid;
  Mat c(g.num_cells(), 2);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      c(g.cell(i, j), 0) = 0.5 * (w.u[g.xface(i, j)] + w.u[g.xface(i + 1, j)]);
      c(g.cell(i, j), 1) = 0.5 * (w.v[g.yface(i, j)] + w.v[g.yface(i, j + 1)]);
    }
  return c;
}

/// `<dir>/<field>_<step:06>.vtk` for velocity, director and pressure.
inline void write_snapshot_vtk(const fs::path& dir, int step, const StateSnapshot& s) {
  char suffix[16];
  std::snprintf(suffix, sizeof suffix, "_%06d.vtk", step);
  const GridSpec& g = s.v.grid;
  atomic_write(dir / ("velocity" + std::string(suffix)), vtk_vectors(g, "velocity", cell_velocity(s.v)));
  atomic_write(dir / ("director" + std::string(suffix)), vtk_vectors(g, "director", s.d.values));
  atomic_write(dir / ("pressure" + std::string(suffix)), vtk_scalar(g, "pressure", s.p.values));
}

// ---- control files ------------------------------------------------------------

/// Rows t, node_index, component, value of h(t_k) = h_ref + u_k at every level.
inline CsvTable control_table(const GridSpec& g, const Deviation& values_per_level) {
  CsvTable t{{"t", "node_index", "component", "value"}, {}};
  for (int k = 0; k < static_cast<int>(values_per_level.size()); ++k)
    for (int n = 0; n < values_per_level[k].rows(); ++n)
      for (int c = 0; c < values_per_level[k].cols(); ++c)
        t.add({g.time(k), double(n), double(c), values_per_level[k](n, c)});
  return t;
}

inline void write_control_csv(const fs::path& path, const BoundaryControl& h) {
  Deviation v;
  for (int k = 0; k < h.num_levels(); ++k) v.push_back(h.at(k).values);
  atomic_write(path, control_table(h.grid, v).str());
}

/// Per-level boundary data (e.g. a gradient) in the control-file layout.
inline void write_boundary_series_csv(const fs::path& path, const GridSpec& g, const Deviation& v) {
  atomic_write(path, control_table(g, v).str());
}

/// Reads a control file on grid g: h_ref is the t = 0 level, u_k = h_k - h_ref.
inline BoundaryControl read_control_csv(const fs::path& path, const GridSpec& g) {
  const CsvTable t = parse_csv(read_file(path), path.string());
  const std::size_t ct = t.column("t"), cn = t.column("node_index"), cc = t.column("component"), cv = t.column("value");
  const int nodes = g.num_boundary_nodes(), levels = g.num_levels();
  Deviation h(levels, Mat::Constant(nodes, g.n_dir, std::numeric_limits<double>::quiet_NaN()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = path.string() + " row " + std::to_string(r + 1);
    const double kf = row[ct] / g.dt;
    const long k = std::lround(kf);
    NEMATIC_REQUIRE(k >= 0 && k < levels && std::abs(kf - k) <= 1e-6, ConfigError, ctx + ": t is not a time level of the grid");
    const long n = std::lround(row[cn]), c = std::lround(row[cc]);
    NEMATIC_REQUIRE(n >= 0 && n < nodes && c >= 0 && c < g.n_dir, ConfigError, ctx + ": node or component out of range");
    h[k](n, c) = row[cv];
  }
  for (int k = 0; k < levels; ++k)
    NEMATIC_REQUIRE(h[k].allFinite(), ConfigError, path.string() + ": missing or non-finite entries at level " + std::to_string(k));
  BoundaryControl out = BoundaryControl::constant({g, h[0]});
  for (int k = 1; k < levels; ++k) out.u[k] = h[k] - h[0];
  return out;
}

}  // namespace nematic
