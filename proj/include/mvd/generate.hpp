#pragma once

// Point-set generators and point/polygon file readers for the harness.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mvd/geometry.hpp"
#include "mvd/tessellation.hpp"

namespace mvd {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline ConvexPolygon unit_square_domain() {
  return ConvexPolygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
}

namespace detail {

// Deterministic, platform-independent uniform in [-1, 1).
class JitterRng {
 public:
  explicit JitterRng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}
  double next() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z = z ^ (z >> 31);
    const double u = (z >> 11) * (1.0 / 9007199254740992.0);  // [0,1)
    return 2.0 * u - 1.0;
  }

 private:
  std::uint64_t state_;
};

}  // namespace detail

/// (n+1)^2 lattice points on the unit square, row-major from (0,0).
inline std::vector<Point2> generate_lattice(int n) {
  if (n < 1) throw std::invalid_argument("lattice: n must be >= 1");
  const double h = 1.0 / n;
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      pts.push_back({i * h, j * h});
  return pts;
}

/// Lattice with interior points displaced uniformly in [-alpha h, alpha h]^2
/// and boundary points jittered only tangentially; corners stay fixed.
inline std::vector<Point2> generate_jitter(int n, double alpha,
                                           std::uint64_t seed) {
  if (alpha < 0.0 || alpha >= 0.5)
    throw std::invalid_argument("jitter: alpha must be in [0, 0.5)");
  std::vector<Point2> pts = generate_lattice(n);
  const double h = 1.0 / n;
  detail::JitterRng rng(seed);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      const double dx = rng.next() * alpha * h;
      const double dy = rng.next() * alpha * h;
      Point2& p = pts[static_cast<std::size_t>(j) * (n + 1) + i];
      const bool on_x = (i == 0 || i == n);
      const bool on_y = (j == 0 || j == n);
      if (on_x && on_y) continue;          // corner
      if (on_y) { p.x += dx; continue; }   // bottom/top edge: tangent is x
      if (on_x) { p.y += dy; continue; }   // left/right edge: tangent is y
      p.x += dx;
      p.y += dy;
    }
  return pts;
}

/// CSV of "x1,x2" lines; '#' starts a comment. Points are validated
/// against the domain with offending line numbers.
inline std::vector<Point2> read_points_csv(const std::string& path,
                                           const ConvexPolygon& domain) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open point file: " + path);
  std::vector<Point2> pts;
  std::string line;
  int lineno = 0;
  const double tol = kEpsGeom * domain.diameter();
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string trimmed;
    for (char ch : line)
      if (!std::isspace(static_cast<unsigned char>(ch))) trimmed += ch;
    if (trimmed.empty()) continue;
    const auto comma = trimmed.find(',');
    if (comma == std::string::npos)
      throw IoError("point file " + path + ": line " + std::to_string(lineno) +
                    ": expected 'x1,x2'");
    try {
      std::size_t used1 = 0, used2 = 0;
      const std::string s1 = trimmed.substr(0, comma);
      const std::string s2 = trimmed.substr(comma + 1);
      const double x = std::stod(s1, &used1);
      const double y = std::stod(s2, &used2);
      if (used1 != s1.size() || used2 != s2.size())
        throw std::invalid_argument("trailing characters");
      pts.push_back({x, y});
    } catch (const std::exception&) {
      throw IoError("point file " + path + ": line " + std::to_string(lineno) +
                    ": malformed number");
    }
    if (domain.signed_distance(pts.back()) > tol)
      throw IoError("point file " + path + ": line " + std::to_string(lineno) +
                    ": point outside the domain");
  }
  if (pts.size() < 3)
    throw IoError("point file " + path + ": fewer than 3 points");
  return pts;
}

/// CSV of domain polygon vertices, ccw.
inline ConvexPolygon read_polygon_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open polygon file: " + path);
  std::vector<Point2> verts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string trimmed;
    for (char ch : line)
      if (!std::isspace(static_cast<unsigned char>(ch))) trimmed += ch;
    if (trimmed.empty()) continue;
    const auto comma = trimmed.find(',');
    if (comma == std::string::npos)
      throw IoError("polygon file " + path + ": line " +
                    std::to_string(lineno) + ": expected 'x1,x2'");
    try {
      verts.push_back({std::stod(trimmed.substr(0, comma)),
                       std::stod(trimmed.substr(comma + 1))});
    } catch (const std::exception&) {
      throw IoError("polygon file " + path + ": line " +
                    std::to_string(lineno) + ": malformed number");
    }
  }
  try {
    return ConvexPolygon(verts);
  } catch (const GeometryError& e) {
    throw IoError("polygon file " + path + ": " + e.what());
  }
}

}  // namespace mvd
