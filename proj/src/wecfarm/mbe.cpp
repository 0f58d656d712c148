#include "wecfarm/mbe.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <utility>

#include "wecfarm/error.hpp"

namespace wecfarm {

Layout::Layout(std::vector<Point> positions) : positions_(std::move(positions)) {
  for (std::size_t p = 0; p < positions_.size(); ++p) {
    require(std::isfinite(positions_[p].x) && std::isfinite(positions_[p].y),
            ErrorKind::validation, "layout coordinates must be finite");
    for (std::size_t q = p + 1; q < positions_.size(); ++q) {
      const double d = std::hypot(positions_[q].x - positions_[p].x,
                                  positions_[q].y - positions_[p].y);
      if (!(d > 0.0)) {
        std::ostringstream msg;
        msg << "devices " << p << " and " << q << " share a position";
        fail(ErrorKind::geometry, msg.str());
      }
    }
  }
}

Layout Layout::translated(double dx, double dy) const {
  std::vector<Point> out = positions_;
  for (auto& pt : out) {
    pt.x += dx;
    pt.y += dy;
  }
  return Layout(std::move(out));
}

Layout Layout::reflected() const {
  std::vector<Point> out = positions_;
  for (auto& pt : out) pt.y = -pt.y;
  return Layout(std::move(out));
}

Layout Layout::permuted(const std::vector<std::size_t>& order) const {
  require(order.size() == positions_.size(), ErrorKind::dimension,
          "permutation size does not match layout");
  std::vector<Point> out;
  out.reserve(order.size());
  for (std::size_t i : order) {
    require(i < positions_.size(), ErrorKind::validation,
            "permutation index out of range");
    out.push_back(positions_[i]);
  }
  return Layout(std::move(out));
}

PairGeometry pair_geometry(const Layout& layout, std::size_t p, std::size_t q) {
  require(p < layout.size() && q < layout.size(), ErrorKind::validation,
          "pair index out of range");
  require(p != q, ErrorKind::validation, "pair geometry needs p != q");
  const double dx = layout[q].x - layout[p].x;
  const double dy = layout[q].y - layout[p].y;
  return {std::hypot(dx, dy), std::atan2(dy, dx)};
}

namespace {

using PairKey = std::pair<double, double>;

PairKey cache_key(const PairGeometry& g) {
  return {std::nearbyint(g.separation * 1e9), std::nearbyint(g.heading * 1e9)};
}

}  // namespace

FarmCoefficients compose_farm(const CoefficientProvider& provider,
                              const WecGeometry& geom, const Layout& layout,
                              const FrequencyGrid& grid,
                              const Environment& env) {
  const std::size_t n = layout.size();
  require(n >= 1, ErrorKind::validation, "layout has no devices");
  const std::size_t nw = grid.size();

  // pair (p, q), p < q, with p as the pair's body 1
  std::map<PairKey, PairCoefficients> cache;
  std::vector<std::vector<const PairCoefficients*>> pairs(
      n, std::vector<const PairCoefficients*>(n, nullptr));
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      const PairGeometry pg = pair_geometry(layout, p, q);
      if (!(pg.separation > 2.0 * geom.radius())) {
        std::ostringstream msg;
        msg << "devices " << p << " and " << q << " overlap (separation "
            << pg.separation << " m, radius " << geom.radius() << " m)";
        fail(ErrorKind::geometry, msg.str());
      }
      const PairKey key = cache_key(pg);
      auto it = cache.find(key);
      if (it == cache.end()) {
        it = cache
                 .emplace(key, provider.pair(geom, pg.separation, pg.heading,
                                             grid, env))
                 .first;
      }
      pairs[p][q] = &it->second;
    }
  }

  const SingleBodyCoefficients single = provider.single(geom, grid, env);
  const auto waves = solve_dispersion(grid, env);

  FarmCoefficients out;
  out.grid = grid;
  out.added_mass.assign(nw, Eigen::MatrixXd::Zero(n, n));
  out.damping.assign(nw, Eigen::MatrixXd::Zero(n, n));
  out.excitation.assign(nw, Eigen::VectorXcd::Zero(n));

  // exp(-i k x); exactly 1 for devices on the x = 0 line
  auto phase = [&](std::size_t iw, std::size_t p) {
    const double x = layout[p].x;
    return x == 0.0 ? Complex(1.0, 0.0) : std::polar(1.0, -waves[iw].k * x);
  };

  for (std::size_t iw = 0; iw < nw; ++iw) {
    auto& am = out.added_mass[iw];
    auto& dm = out.damping[iw];
    auto& fe = out.excitation[iw];
    for (std::size_t p = 0; p < n; ++p) {
      const Complex own_phase = phase(iw, p);
      const Complex isolated = single.excitation[iw] * own_phase;
      bool first = true;
      for (std::size_t q = 0; q < n; ++q) {
        if (q == p) continue;
        const std::size_t lead = std::min(p, q);
        const PairCoefficients& pc = *pairs[lead][std::max(p, q)];
        const int local = p < q ? 0 : 1;
        const double a = pc.added_mass[iw](local, local);
        const double b = pc.damping[iw](local, local);
        Complex f = pc.excitation[iw](local);
        if (layout[lead].x != 0.0) f *= phase(iw, lead);
        if (first) {
          // starting from the first pair keeps N = 2 identical to the pair
          am(p, p) = a;
          dm(p, p) = b;
          fe(p) = f;
          first = false;
        } else {
          am(p, p) += a - single.added_mass[iw];
          dm(p, p) += b - single.damping[iw];
          fe(p) += f - isolated;
        }
        if (p < q) {
          am(p, q) = am(q, p) = pc.added_mass[iw](0, 1);
          dm(p, q) = dm(q, p) = pc.damping[iw](0, 1);
        }
      }
      if (first) {
        am(p, p) = single.added_mass[iw];
        dm(p, p) = single.damping[iw];
        fe(p) = isolated;
      }
    }
  }
  return out;
}

}  // namespace wecfarm
