#pragma once

// Planar primitives, orientation/incircle predicates, circumcenters and
// convex clipping. All predicates are floating point with a scaled
// tolerance; callers that need reproducible tie handling resolve "on"
// results themselves.

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvd {

inline constexpr double kEpsGeom = 1e-12;

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
inline Point2 operator-(Point2 a) { return {-a.x, -a.y}; }

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Point2 a) { return dot(a, a); }
inline double norm(Point2 a) { return std::sqrt(norm2(a)); }
inline double dist(Point2 a, Point2 b) { return norm(a - b); }

// Rotations by +-90 degrees; rot90cw(e2) together with e2 gives a
// right-handed frame (cross(rot90cw(v), v) = |v|^2).
inline Point2 rot90cw(Point2 v) { return {v.y, -v.x}; }
inline Point2 rot90ccw(Point2 v) { return {-v.y, v.x}; }

inline bool finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

inline double coord_scale(std::initializer_list<Point2> pts) {
  double s = 0.0;
  for (const Point2& p : pts)
    s = std::max({s, std::abs(p.x), std::abs(p.y)});
  return s;
}

/// Twice the signed area of triangle abc (positive when ccw). The
/// three-term form is exactly antisymmetric under swapping two vertices.
inline double orient2d(Point2 a, Point2 b, Point2 c) {
  return a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y);
}

/// Sign of orient2d with threshold kEpsGeom * scale^2; 0 means collinear.
inline int orient2d_sign(Point2 a, Point2 b, Point2 c, double eps = kEpsGeom) {
  const double det = orient2d(a, b, c);
  const double s = coord_scale({a, b, c});
  const double tol = eps * s * s;
  if (det > tol) return 1;
  if (det < -tol) return -1;
  return 0;
}

enum class CircleSide { Inside, On, Outside };

/// Classifies d against the circumcircle of ccw triangle abc.
/// |det| <= kEpsGeom * scale^4 reports On.
inline CircleSide incircle(Point2 a, Point2 b, Point2 c, Point2 d,
                           double eps = kEpsGeom) {
  if (orient2d_sign(a, b, c, eps) <= 0)
    throw GeometryError("incircle: degenerate (collinear or cw) triangle");
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double ad2 = adx * adx + ady * ady;
  const double bd2 = bdx * bdx + bdy * bdy;
  const double cd2 = cdx * cdx + cdy * cdy;
  const double det = adx * (bdy * cd2 - cdy * bd2) -
                     ady * (bdx * cd2 - cdx * bd2) +
                     ad2 * (bdx * cdy - cdx * bdy);
  const double s = coord_scale({a, b, c, d});
  const double tol = eps * s * s * s * s;
  if (det > tol) return CircleSide::Inside;
  if (det < -tol) return CircleSide::Outside;
  return CircleSide::On;
}

/// Circumcenter of triangle abc; throws on (near-)collinear input.
/// Computed after translating to a and in extended precision, so the
/// result sits on the perpendicular bisectors to within the final
/// double rounding; grid duality tests lean on that.
inline Point2 circumcenter(Point2 a, Point2 b, Point2 c) {
  const long double ux = static_cast<long double>(b.x) - a.x;
  const long double uy = static_cast<long double>(b.y) - a.y;
  const long double vx = static_cast<long double>(c.x) - a.x;
  const long double vy = static_cast<long double>(c.y) - a.y;
  const long double d = 2.0L * (ux * vy - uy * vx);
  const double s = coord_scale({a, b, c});
  if (std::abs(static_cast<double>(d)) <= kEpsGeom * s * s * 2.0)
    throw GeometryError("circumcenter: degenerate triangle");
  const long double u2 = ux * ux + uy * uy;
  const long double v2 = vx * vx + vy * vy;
  const long double ox = (vy * u2 - uy * v2) / d;
  const long double oy = (ux * v2 - vx * u2) / d;
  return {static_cast<double>(a.x + ox), static_cast<double>(a.y + oy)};
}

/// Half-plane {x : dot(normal, x) <= offset}. The normal need not be
/// normalized.
struct HalfPlane {
  Point2 normal;
  double offset = 0.0;
};

inline double polygon_area(std::span<const Point2> v) {
  double twice = 0.0;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = v[i];
    const Point2& q = v[(i + 1) % n];
    twice += p.x * q.y - p.y * q.x;
  }
  return 0.5 * twice;
}

/// Convex ccw polygon. The validating constructor enforces strict
/// convexity; `unchecked` wraps polygons produced by clipping, which may
/// carry nearly collinear vertices.
class ConvexPolygon {
 public:
  ConvexPolygon() = default;

  explicit ConvexPolygon(std::vector<Point2> verts) : v_(std::move(verts)) {
    if (v_.size() < 3)
      throw GeometryError("polygon: needs at least 3 vertices");
    for (const Point2& p : v_)
      if (!finite(p)) throw GeometryError("polygon: non-finite vertex");
    const std::size_t n = v_.size();
    double scale = 0.0;
    for (const Point2& p : v_)
      scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (dist(v_[i], v_[j]) <= kEpsGeom * scale)
          throw GeometryError("polygon: repeated vertex " + std::to_string(j));
    for (std::size_t i = 0; i < n; ++i) {
      if (orient2d_sign(v_[i], v_[(i + 1) % n], v_[(i + 2) % n]) <= 0)
        throw GeometryError("polygon: not strictly convex ccw at vertex " +
                            std::to_string((i + 1) % n));
    }
  }

  static ConvexPolygon unchecked(std::vector<Point2> verts) {
    ConvexPolygon p;
    p.v_ = std::move(verts);
    return p;
  }

  const std::vector<Point2>& vertices() const { return v_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  double area() const { return polygon_area(std::span<const Point2>(v_)); }

  double diameter() const {
    double d = 0.0;
    for (std::size_t i = 0; i < v_.size(); ++i)
      for (std::size_t j = i + 1; j < v_.size(); ++j)
        d = std::max(d, dist(v_[i], v_[j]));
    return d;
  }

  /// Max over edges of the outward signed distance; <= 0 inside.
  double signed_distance(Point2 p) const {
    double sd = -std::numeric_limits<double>::infinity();
    const std::size_t n = v_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 a = v_[i];
      const Point2 b = v_[(i + 1) % n];
      const Point2 nrm = rot90cw(b - a);
      sd = std::max(sd, dot(p - a, nrm) / norm(nrm));
    }
    return sd;
  }

  bool contains(Point2 p, double tol) const { return signed_distance(p) <= tol; }

 private:
  std::vector<Point2> v_;
};

/// Intersection of a convex ccw polygon with a half-plane. Vertices on
/// the cut line are emitted once; an empty intersection yields nullopt.
inline std::optional<ConvexPolygon> clip_convex(const ConvexPolygon& poly,
                                                const HalfPlane& hp) {
  const auto& v = poly.vertices();
  const std::size_t n = v.size();
  if (n == 0) return std::nullopt;
  double scale = std::abs(hp.offset);
  for (const Point2& p : v)
    scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
  const double tol = kEpsGeom * std::max(1.0, scale) * norm(hp.normal);

  std::vector<double> val(n);
  std::vector<int> side(n);  // -1 in, 0 on, +1 out
  for (std::size_t i = 0; i < n; ++i) {
    val[i] = dot(hp.normal, v[i]) - hp.offset;
    side[i] = val[i] > tol ? 1 : (val[i] < -tol ? -1 : 0);
  }

  std::vector<Point2> out;
  out.reserve(n + 2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    if (side[i] <= 0) out.push_back(v[i]);
    if ((side[i] < 0 && side[j] > 0) || (side[i] > 0 && side[j] < 0)) {
      const double t = val[i] / (val[i] - val[j]);
      out.push_back(v[i] + t * (v[j] - v[i]));
    }
  }
  if (out.size() < 3) return std::nullopt;
  return ConvexPolygon::unchecked(std::move(out));
}

/// Interior crossing point of open segments pq and rs, if any.
inline std::optional<Point2> segment_cross(Point2 p, Point2 q, Point2 r,
                                           Point2 s) {
  const Point2 d1 = q - p;
  const Point2 d2 = s - r;
  const double den = cross(d1, d2);
  const double scale = coord_scale({p, q, r, s});
  if (std::abs(den) <= kEpsGeom * scale * scale) return std::nullopt;
  const Point2 w = r - p;
  const double t = cross(w, d2) / den;
  const double u = cross(w, d1) / den;
  const double tol = kEpsGeom;
  if (t <= tol || t >= 1.0 - tol || u <= tol || u >= 1.0 - tol)
    return std::nullopt;
  return p + t * d1;
}

}  // namespace mvd
