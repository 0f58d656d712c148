#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "wecfarm/hydro.hpp"

namespace wecfarm {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

// Device centres in the farm frame; waves travel along +x. Design layouts pin
// the first device at the origin, but the composition itself accepts any
// placement.
class Layout {
 public:
  Layout() = default;
  explicit Layout(std::vector<Point> positions);

  const std::vector<Point>& positions() const { return positions_; }
  std::size_t size() const { return positions_.size(); }
  const Point& operator[](std::size_t i) const { return positions_[i]; }

  Layout translated(double dx, double dy) const;
  Layout reflected() const;  // y -> -y
  Layout permuted(const std::vector<std::size_t>& order) const;

 private:
  std::vector<Point> positions_;
};

struct PairGeometry {
  double separation;
  double heading;
};

// Distance and direction atan2(y_q - y_p, x_q - x_p) from device p to q.
PairGeometry pair_geometry(const Layout& layout, std::size_t p, std::size_t q);

struct FarmCoefficients {
  FrequencyGrid grid;
  std::vector<Eigen::MatrixXd> added_mass;
  std::vector<Eigen::MatrixXd> damping;
  std::vector<Eigen::VectorXcd> excitation;

  std::size_t bodies() const {
    return excitation.empty() ? 0 : excitation.front().size();
  }
};

// Second-order many-body expansion:
//   A_pp = A_single + sum_{q != p} (A11^{pq} - A_single),  A_pq = A12^{pq}
// and the same for damping; excitation pair terms are referenced to the
// farm origin through exp(-i k x_p).
FarmCoefficients compose_farm(const CoefficientProvider& provider,
                              const WecGeometry& geom, const Layout& layout,
                              const FrequencyGrid& grid,
                              const Environment& env);

}  // namespace wecfarm
