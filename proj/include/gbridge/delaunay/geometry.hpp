#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <json.hpp>

#include "gbridge/core/rng.hpp"

namespace gbridge::delaunay {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

inline double squared_distance(const Point& a, const Point& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

struct Window {
  double xmin = 0.0;
  double xmax = 1.0;
  double ymin = 0.0;
  double ymax = 1.0;

  double width() const noexcept { return xmax - xmin; }
  double height() const noexcept { return ymax - ymin; }
  double area() const noexcept { return width() * height(); }
  bool contains(const Point& p) const noexcept {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
};

/// Sign of the orientation determinant of (a, b, c): +1 counter-clockwise,
/// -1 clockwise, 0 collinear. Exact (filtered double, rational fallback).
int orient2d(const Point& a, const Point& b, const Point& c);

/// +1 if d lies strictly inside the circumcircle of the counter-clockwise
/// triangle (a, b, c), -1 if strictly outside, 0 if cocircular. Exact.
int incircle(const Point& a, const Point& b, const Point& c, const Point& d);

/// Homogeneous planar Poisson process on `window`: N ~ Poisson(intensity * area)
/// points, i.i.d. uniform.
std::vector<Point> sample_poisson_points(double intensity, const Window& window, Rng& rng);
std::vector<Point> sample_poisson_points(double intensity, const Window& window,
                                         std::uint64_t seed);

/// Delaunay triangulation of a finite planar point set, kept as a graph.
class DelaunayGraph {
 public:
  DelaunayGraph(std::vector<Point> points, std::vector<std::vector<int>> neighbors,
                std::vector<std::array<int, 3>> triangles, Window window);

  const std::vector<Point>& points() const noexcept { return points_; }
  const Point& point(int i) const { return points_[static_cast<std::size_t>(i)]; }
  /// Sorted adjacency list of vertex i.
  const std::vector<int>& neighbors(int i) const { return neighbors_[static_cast<std::size_t>(i)]; }
  /// Coordinates of the neighbors of i, aligned with neighbors(i).
  const std::vector<double>& neighbor_xs(int i) const { return nx_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& neighbor_ys(int i) const { return ny_[static_cast<std::size_t>(i)]; }
  /// Counter-clockwise triangles over vertex indices.
  const std::vector<std::array<int, 3>>& triangles() const noexcept { return triangles_; }
  const Window& window() const noexcept { return window_; }

  std::size_t vertex_count() const noexcept { return points_.size(); }
  std::size_t edge_count() const noexcept;
  int degree(int i) const { return static_cast<int>(neighbors(i).size()); }
  bool adjacent(int i, int j) const;
  /// Longest edge; the finite-window stand-in for a global edge-length bound.
  double max_edge_length() const;
  /// Vertex closest to p (lowest index on ties).
  int nearest_vertex(const Point& p) const;

 private:
  std::vector<Point> points_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::vector<double>> nx_;
  std::vector<std::vector<double>> ny_;
  std::vector<std::array<int, 3>> triangles_;
  Window window_;
};

/// Bowyer-Watson triangulation with exact predicates. Points are inserted in
/// lexicographic (x, then y) order and a point on a circumcircle does not
/// invalidate that triangle, so cocircular ties resolve deterministically in
/// favor of the earlier-inserted configuration. For the unit square
/// {(0,0), (1,0), (0,1), (1,1)} the diagonal is (0,1)-(1,0).
/// Throws DegeneracyError on fewer than 3 points, duplicates, or all-collinear input.
/// Without an explicit window the bounding box is used.
DelaunayGraph build_delaunay(std::vector<Point> points,
                             std::optional<Window> window = std::nullopt);

/// Neighbor of a vertex on the torus, with the wrapped displacement to it.
struct PeriodicNeighbor {
  int index = 0;
  double dx = 0.0;
  double dy = 0.0;
};

/// Delaunay graph of a point set on the flat torus given by `window`.
struct PeriodicGraph {
  std::vector<Point> points;
  std::vector<std::vector<PeriodicNeighbor>> neighbors;
  Window window;
};

/// Triangulates the points together with translated copies of those within
/// `margin` of the boundary and keeps the stars of the original points. The
/// default margin is 8 mean spacings (8 / sqrt(density)).
PeriodicGraph build_periodic_delaunay(const std::vector<Point>& points, const Window& window,
                                      std::optional<double> margin = std::nullopt);

nlohmann::json graph_to_json(const DelaunayGraph& g);
DelaunayGraph graph_from_json(const nlohmann::json& j);
/// Reads "x,y" rows; a non-numeric first row is treated as a header.
std::vector<Point> read_points_csv(std::istream& is);

}  // namespace gbridge::delaunay
