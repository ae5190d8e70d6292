#pragma once
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "field.hpp"

namespace vdflow {

// Snapshot format: header `grid n=<N> L=<float> kind=<scalar|vector|matrix>`, then one
// row-major block of n lines x n comma-separated values per component, blocks separated
// by a blank line. Matrix components are ordered (0,0), (0,1), (1,0), (1,1).

namespace detail {

inline void write_block(std::ostream& os, const ScalarField& f) {
  const int n = f.grid.n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j) os << ',';
      os << f(i, j);
    }
    os << '\n';
  }
}

inline void write_snapshot(std::ostream& os, const Grid& g, const char* kind, const std::vector<const ScalarField*>& blocks) {
  os << std::setprecision(17);
  os << "grid n=" << g.n << " L=" << g.L << " kind=" << kind << '\n';
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (b) os << '\n';
    write_block(os, *blocks[b]);
  }
}

struct ParsedSnapshot {
  Grid grid;
  std::string kind;
  std::vector<ScalarField> blocks;
};

inline ParsedSnapshot read_snapshot(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("snapshot: empty input");
  ParsedSnapshot out;
  int n = 0;
  double L = 0;
  {
    std::istringstream hs(header);
    std::string tok;
    hs >> tok;
    if (tok != "grid") throw std::runtime_error("snapshot: header must start with 'grid'");
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw std::runtime_error("snapshot: malformed header token '" + tok + "'");
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "n") n = std::stoi(val);
      else if (key == "L") L = std::stod(val);
      else if (key == "kind") out.kind = val;
    }
  }
  out.grid = Grid(n, L);
  std::size_t expected = out.kind == "scalar" ? 1 : out.kind == "vector" ? 2 : out.kind == "matrix" ? 4 : 0;
  if (!expected) throw std::runtime_error("snapshot: unknown kind '" + out.kind + "'");
  std::string line;
  ScalarField cur(out.grid);
  int row = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    int col = 0;
    while (std::getline(ls, cell, ',')) {
      if (col >= n) throw std::runtime_error("snapshot: too many columns");
      cur(row, col++) = std::stod(cell);
    }
    if (col != n) throw std::runtime_error("snapshot: expected " + std::to_string(n) + " columns");
    if (++row == n) {
      out.blocks.push_back(cur);
      row = 0;
    }
  }
  if (row != 0 || out.blocks.size() != expected) throw std::runtime_error("snapshot: truncated data");
  return out;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot open " + p.string() + " for writing");
  return os;
}

inline ParsedSnapshot read_snapshot_file(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw std::runtime_error("cannot open " + p.string());
  return read_snapshot(is);
}

}  // namespace detail

inline void write_snapshot(std::ostream& os, const ScalarField& f) { detail::write_snapshot(os, f.grid, "scalar", {&f}); }
inline void write_snapshot(std::ostream& os, const VectorField& v) {
  detail::write_snapshot(os, v.grid(), "vector", {&v[0], &v[1]});
}
inline void write_snapshot(std::ostream& os, const MatrixField& m) {
  detail::write_snapshot(os, m.grid(), "matrix", {&m.e[0], &m.e[1], &m.e[2], &m.e[3]});
}

template <class Field>
void write_snapshot_file(const std::filesystem::path& p, const Field& f) {
  auto os = detail::open_out(p);
  write_snapshot(os, f);
}

inline ScalarField read_scalar_snapshot(std::istream& is) {
  auto s = detail::read_snapshot(is);
  if (s.kind != "scalar") throw std::runtime_error("snapshot: expected scalar, got " + s.kind);
  return s.blocks[0];
}
inline VectorField read_vector_snapshot(std::istream& is) {
  auto s = detail::read_snapshot(is);
  if (s.kind != "vector") throw std::runtime_error("snapshot: expected vector, got " + s.kind);
  return VectorField(s.blocks[0], s.blocks[1]);
}
inline MatrixField read_matrix_snapshot(std::istream& is) {
  auto s = detail::read_snapshot(is);
  if (s.kind != "matrix") throw std::runtime_error("snapshot: expected matrix, got " + s.kind);
  MatrixField m(s.grid);
  for (int k = 0; k < 4; ++k) m.e[k] = s.blocks[k];
  return m;
}

}  // namespace vdflow
