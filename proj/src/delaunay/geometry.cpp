#include "gbridge/delaunay/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "gbridge/core/error.hpp"

namespace gbridge::delaunay {

namespace {

using Rational = boost::multiprecision::cpp_rational;

constexpr double kEps = std::numeric_limits<double>::epsilon() * 0.5;
constexpr double kCcwErrBound = (3.0 + 16.0 * kEps) * kEps;
constexpr double kIccErrBound = (10.0 + 96.0 * kEps) * kEps;

template <class T>
int sign_of(const T& v) {
  return v > 0 ? 1 : (v < 0 ? -1 : 0);
}

int orient2d_exact(const Point& a, const Point& b, const Point& c) {
  const Rational acx = Rational(a.x) - Rational(c.x);
  const Rational bcx = Rational(b.x) - Rational(c.x);
  const Rational acy = Rational(a.y) - Rational(c.y);
  const Rational bcy = Rational(b.y) - Rational(c.y);
  return sign_of(Rational(acx * bcy - acy * bcx));
}

int incircle_exact(const Point& a, const Point& b, const Point& c, const Point& d) {
  const Rational adx = Rational(a.x) - Rational(d.x), ady = Rational(a.y) - Rational(d.y);
  const Rational bdx = Rational(b.x) - Rational(d.x), bdy = Rational(b.y) - Rational(d.y);
  const Rational cdx = Rational(c.x) - Rational(d.x), cdy = Rational(c.y) - Rational(d.y);
  const Rational alift = adx * adx + ady * ady;
  const Rational blift = bdx * bdx + bdy * bdy;
  const Rational clift = cdx * cdx + cdy * cdy;
  const Rational det = alift * (bdx * cdy - cdx * bdy) + blift * (cdx * ady - adx * cdy) +
                       clift * (adx * bdy - bdx * ady);
  return sign_of(det);
}

}  // namespace

int orient2d(const Point& a, const Point& b, const Point& c) {
  const double detleft = (a.x - c.x) * (b.y - c.y);
  const double detright = (a.y - c.y) * (b.x - c.x);
  const double det = detleft - detright;
  const double bound = kCcwErrBound * (std::abs(detleft) + std::abs(detright));
  if (det > bound || -det > bound) return sign_of(det);
  return orient2d_exact(a, b, c);
}

int incircle(const Point& a, const Point& b, const Point& c, const Point& d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;

  const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
  const double alift = adx * adx + ady * ady;
  const double cdxady = cdx * ady, adxcdy = adx * cdy;
  const double blift = bdx * bdx + bdy * bdy;
  const double adxbdy = adx * bdy, bdxady = bdx * ady;
  const double clift = cdx * cdx + cdy * cdy;

  const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) +
                     clift * (adxbdy - bdxady);
  const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift +
                           (std::abs(cdxady) + std::abs(adxcdy)) * blift +
                           (std::abs(adxbdy) + std::abs(bdxady)) * clift;
  const double bound = kIccErrBound * permanent;
  if (det > bound || -det > bound) return sign_of(det);
  return incircle_exact(a, b, c, d);
}

std::vector<Point> sample_poisson_points(double intensity, const Window& window, Rng& rng) {
  if (!(window.area() > 0.0)) throw DomainError("sample_poisson_points: window area must be positive");
  if (!(intensity >= 0.0)) throw DomainError("sample_poisson_points: intensity must be non-negative");
  const std::uint64_t n = rng.poisson(intensity * window.area());
  std::vector<Point> pts;
  pts.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double x = rng.uniform(window.xmin, window.xmax);
    const double y = rng.uniform(window.ymin, window.ymax);
    pts.push_back({x, y});
  }
  return pts;
}

std::vector<Point> sample_poisson_points(double intensity, const Window& window,
                                         std::uint64_t seed) {
  Rng rng(seed);
  return sample_poisson_points(intensity, window, rng);
}

// ---------------------------------------------------------------------------
// DelaunayGraph

DelaunayGraph::DelaunayGraph(std::vector<Point> points, std::vector<std::vector<int>> neighbors,
                             std::vector<std::array<int, 3>> triangles, Window window)
    : points_(std::move(points)),
      neighbors_(std::move(neighbors)),
      triangles_(std::move(triangles)),
      window_(window) {
  if (neighbors_.size() != points_.size())
    throw DimensionError("DelaunayGraph: adjacency size differs from point count");
  const int n = static_cast<int>(points_.size());
  for (auto& nb : neighbors_) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    for (int j : nb)
      if (j < 0 || j >= n) throw DomainError("DelaunayGraph: neighbor index out of range");
  }
  for (int i = 0; i < n; ++i)
    for (int j : neighbors_[i])
      if (j == i || !std::binary_search(neighbors_[j].begin(), neighbors_[j].end(), i))
        throw DomainError("DelaunayGraph: adjacency is not symmetric");
  nx_.resize(points_.size());
  ny_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (int j : neighbors_[i]) {
      nx_[i].push_back(points_[j].x);
      ny_[i].push_back(points_[j].y);
    }
  }
}

std::size_t DelaunayGraph::edge_count() const noexcept {
  std::size_t deg = 0;
  for (const auto& nb : neighbors_) deg += nb.size();
  return deg / 2;
}

bool DelaunayGraph::adjacent(int i, int j) const {
  const auto& nb = neighbors(i);
  return std::binary_search(nb.begin(), nb.end(), j);
}

double DelaunayGraph::max_edge_length() const {
  double m = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i)
    for (int j : neighbors_[i]) m = std::max(m, squared_distance(points_[i], points_[j]));
  return std::sqrt(m);
}

int DelaunayGraph::nearest_vertex(const Point& p) const {
  int best = -1;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const double d = squared_distance(points_[i], p);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Bowyer-Watson

namespace {

struct Tri {
  std::array<int, 3> v;   // counter-clockwise
  std::array<int, 3> nb;  // nb[i] is across the edge opposite v[i]
  bool alive = true;
};

class Triangulator {
 public:
  explicit Triangulator(std::vector<Point> pts) : pts_(std::move(pts)) {}

  void run(const std::vector<int>& order) {
    const int n = static_cast<int>(pts_.size());
    double xmin = pts_[0].x, xmax = xmin, ymin = pts_[0].y, ymax = ymin;
    for (const auto& p : pts_) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    const double extent = std::max({xmax - xmin, ymax - ymin, 1e-300});
    const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
    const double r = 1e5 * extent;
    pts_.push_back({cx - 2.0 * r, cy - r});
    pts_.push_back({cx + 2.0 * r, cy - r});
    pts_.push_back({cx, cy + 2.0 * r});
    tris_.push_back({{n, n + 1, n + 2}, {-1, -1, -1}, true});
    super_ = n;
    last_ = 0;
    for (int idx : order) insert(idx);
  }

  bool is_super(int v) const { return v >= super_; }
  const std::vector<Tri>& tris() const { return tris_; }

 private:
  int locate(const Point& p) {
    int t = last_;
    unsigned rot = 0;
    for (std::size_t steps = 0; steps < 4 * tris_.size() + 16; ++steps) {
      const Tri& tr = tris_[t];
      bool moved = false;
      for (int k = 0; k < 3; ++k) {
        const int i = static_cast<int>((k + rot) % 3);
        const int a = tr.v[(i + 1) % 3], b = tr.v[(i + 2) % 3];
        if (orient2d(pts_[a], pts_[b], p) < 0) {
          t = tr.nb[i];
          moved = true;
          break;
        }
      }
      if (!moved) return t;
      rot = rot * 1103515245u + 12345u;
      rot >>= 16;
    }
    // Walk failed to converge; fall back to a linear scan.
    for (std::size_t i = 0; i < tris_.size(); ++i) {
      const Tri& tr = tris_[i];
      if (!tr.alive) continue;
      if (orient2d(pts_[tr.v[0]], pts_[tr.v[1]], p) >= 0 &&
          orient2d(pts_[tr.v[1]], pts_[tr.v[2]], p) >= 0 &&
          orient2d(pts_[tr.v[2]], pts_[tr.v[0]], p) >= 0)
        return static_cast<int>(i);
    }
    throw DegeneracyError("build_delaunay: point location failed");
  }

  bool in_cavity(int t, const Point& p) const {
    const Tri& tr = tris_[t];
    return incircle(pts_[tr.v[0]], pts_[tr.v[1]], pts_[tr.v[2]], p) > 0;
  }

  void insert(int pi) {
    const Point& p = pts_[pi];
    const int start = locate(p);

    cavity_.clear();
    stack_.clear();
    stack_.push_back(start);
    mark_.resize(tris_.size(), 0);
    ++epoch_;
    mark_[start] = epoch_;
    while (!stack_.empty()) {
      const int t = stack_.back();
      stack_.pop_back();
      cavity_.push_back(t);
      for (int k = 0; k < 3; ++k) {
        const int u = tris_[t].nb[k];
        if (u < 0 || mark_[u] == epoch_) continue;
        if (in_cavity(u, p)) {
          mark_[u] = epoch_;
          stack_.push_back(u);
        }
      }
    }

    // Boundary edges (a, b) in ccw order of their cavity triangle.
    boundary_.clear();
    for (int t : cavity_) {
      const Tri& tr = tris_[t];
      for (int k = 0; k < 3; ++k) {
        const int u = tr.nb[k];
        if (u >= 0 && mark_[u] == epoch_) continue;
        boundary_.push_back({tr.v[(k + 1) % 3], tr.v[(k + 2) % 3], u});
      }
    }
    for (int t : cavity_) tris_[t].alive = false;

    // New fan around p. Triangle (a, b, p): edge opposite p is (a, b).
    start_of_.clear();
    const int base = static_cast<int>(tris_.size());
    for (std::size_t e = 0; e < boundary_.size(); ++e) {
      const auto& ed = boundary_[e];
      Tri nt{{ed.a, ed.b, pi}, {-1, -1, ed.outside}, true};
      tris_.push_back(nt);
      const int id = base + static_cast<int>(e);
      if (ed.outside >= 0) {
        Tri& o = tris_[ed.outside];
        for (int k = 0; k < 3; ++k)
          if (o.v[(k + 1) % 3] == ed.b && o.v[(k + 2) % 3] == ed.a) o.nb[k] = id;
      }
      start_of_.emplace_back(ed.a, id);
    }
    std::sort(start_of_.begin(), start_of_.end());
    auto find_start = [&](int v) {
      auto it = std::lower_bound(start_of_.begin(), start_of_.end(), std::make_pair(v, -1));
      return it->second;
    };
    for (std::size_t e = 0; e < boundary_.size(); ++e) {
      const int id = base + static_cast<int>(e);
      Tri& nt = tris_[id];
      // Edge opposite a is (b, p), shared with the fan triangle starting at b.
      nt.nb[0] = find_start(nt.v[1]);
    }
    for (std::size_t e = 0; e < boundary_.size(); ++e) {
      const int id = base + static_cast<int>(e);
      const int succ = tris_[id].nb[0];
      tris_[succ].nb[1] = id;
    }
    last_ = base;
  }

  std::vector<Point> pts_;
  std::vector<Tri> tris_;
  int super_ = 0;
  int last_ = 0;
  std::vector<int> cavity_, stack_;
  std::vector<unsigned> mark_;
  unsigned epoch_ = 0;
  struct BEdge {
    int a, b, outside;
  };
  std::vector<BEdge> boundary_;
  std::vector<std::pair<int, int>> start_of_;
};

Window bounding_box(const std::vector<Point>& pts) {
  Window w{pts[0].x, pts[0].x, pts[0].y, pts[0].y};
  for (const auto& p : pts) {
    w.xmin = std::min(w.xmin, p.x);
    w.xmax = std::max(w.xmax, p.x);
    w.ymin = std::min(w.ymin, p.y);
    w.ymax = std::max(w.ymax, p.y);
  }
  return w;
}

}  // namespace

DelaunayGraph build_delaunay(std::vector<Point> points, std::optional<Window> window) {
  const int n = static_cast<int>(points.size());
  if (n < 3) throw DegeneracyError("build_delaunay: need at least 3 points");
  for (const auto& p : points)
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw DomainError("build_delaunay: non-finite coordinate");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return points[a].x < points[b].x || (points[a].x == points[b].x && points[a].y < points[b].y);
  });
  for (int i = 1; i < n; ++i)
    if (points[order[i]] == points[order[i - 1]])
      throw DegeneracyError("build_delaunay: duplicate points");
  bool collinear = true;
  for (int i = 2; i < n && collinear; ++i)
    if (orient2d(points[order[0]], points[order[1]], points[order[i]]) != 0) collinear = false;
  if (collinear) throw DegeneracyError("build_delaunay: all points are collinear");

  Triangulator tri(points);
  tri.run(order);

  std::vector<std::vector<int>> nb(static_cast<std::size_t>(n));
  std::vector<std::array<int, 3>> triangles;
  for (const auto& t : tri.tris()) {
    if (!t.alive) continue;
    for (int k = 0; k < 3; ++k) {
      const int a = t.v[k], b = t.v[(k + 1) % 3];
      if (tri.is_super(a) || tri.is_super(b)) continue;
      nb[a].push_back(b);
      nb[b].push_back(a);
    }
    if (!tri.is_super(t.v[0]) && !tri.is_super(t.v[1]) && !tri.is_super(t.v[2]))
      triangles.push_back(t.v);
  }
  const Window w = window ? *window : bounding_box(points);
  return DelaunayGraph(std::move(points), std::move(nb), std::move(triangles), w);
}

PeriodicGraph build_periodic_delaunay(const std::vector<Point>& points, const Window& window,
                                      std::optional<double> margin) {
  if (points.size() < 3) throw DegeneracyError("build_periodic_delaunay: need at least 3 points");
  const double W = window.width(), H = window.height();
  double m = margin ? *margin : 8.0 / std::sqrt(static_cast<double>(points.size()) / window.area());
  m = std::min(m, 0.5 * std::min(W, H));

  std::vector<Point> all(points);
  std::vector<int> origin(points.size());
  std::iota(origin.begin(), origin.end(), 0);
  for (int sx = -1; sx <= 1; ++sx) {
    for (int sy = -1; sy <= 1; ++sy) {
      if (sx == 0 && sy == 0) continue;
      for (std::size_t i = 0; i < points.size(); ++i) {
        const Point q{points[i].x + sx * W, points[i].y + sy * H};
        if (q.x >= window.xmin - m && q.x <= window.xmax + m && q.y >= window.ymin - m &&
            q.y <= window.ymax + m) {
          all.push_back(q);
          origin.push_back(static_cast<int>(i));
        }
      }
    }
  }
  const DelaunayGraph g = build_delaunay(all);

  PeriodicGraph out;
  out.points = points;
  out.window = window;
  out.neighbors.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int j : g.neighbors(static_cast<int>(i))) {
      const Point& q = g.point(j);
      out.neighbors[i].push_back({origin[j], q.x - points[i].x, q.y - points[i].y});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// I/O

nlohmann::json graph_to_json(const DelaunayGraph& g) {
  nlohmann::json j;
  auto pts = nlohmann::json::array();
  for (const auto& p : g.points()) pts.push_back({p.x, p.y});
  j["points"] = std::move(pts);
  auto nbs = nlohmann::json::array();
  for (std::size_t i = 0; i < g.vertex_count(); ++i) nbs.push_back(g.neighbors(static_cast<int>(i)));
  j["neighbors"] = std::move(nbs);
  auto tris = nlohmann::json::array();
  for (const auto& t : g.triangles()) tris.push_back({t[0], t[1], t[2]});
  j["triangles"] = std::move(tris);
  const Window& w = g.window();
  j["window"] = {{"xmin", w.xmin}, {"xmax", w.xmax}, {"ymin", w.ymin}, {"ymax", w.ymax}};
  return j;
}

DelaunayGraph graph_from_json(const nlohmann::json& j) {
  std::vector<Point> pts;
  for (const auto& p : j.at("points")) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  std::optional<Window> w;
  if (j.contains("window")) {
    const auto& jw = j["window"];
    w = Window{jw.at("xmin").get<double>(), jw.at("xmax").get<double>(),
               jw.at("ymin").get<double>(), jw.at("ymax").get<double>()};
  }
  if (!w) w = bounding_box(pts);
  if (!j.contains("neighbors")) return build_delaunay(std::move(pts), w);
  auto nb = j["neighbors"].get<std::vector<std::vector<int>>>();
  std::vector<std::array<int, 3>> tris;
  if (j.contains("triangles")) tris = j["triangles"].get<std::vector<std::array<int, 3>>>();
  return DelaunayGraph(std::move(pts), std::move(nb), std::move(tris), *w);
}

std::vector<Point> read_points_csv(std::istream& is) {
  std::vector<Point> pts;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    Point p;
    if (!(ss >> p.x >> p.y)) {
      if (first) {
        first = false;
        continue;
      }
      throw DomainError("read_points_csv: malformed row '" + line + "'");
    }
    first = false;
    pts.push_back(p);
  }
  return pts;
}

}  // namespace gbridge::delaunay
