#include "levyhjm/generating_pair.hpp"

#include <algorithm>
#include <cmath>

#include "levyhjm/errors.hpp"

namespace levyhjm {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + " must be finite");
}

}  // namespace

GeneratingPair GeneratingPair::identity() {
  GeneratingPair g = constant(0.0, 0.0);
  g.name_ = "identity";
  return g;
}

GeneratingPair GeneratingPair::constant(double phi, double theta) {
  require_finite(phi, "phi");
  require_finite(theta, "psi");
  GeneratingPair g;
  g.name_ = "constant";
  g.phi_ = [phi](double, const PathHistory&) { return phi; };
  g.psi_ = [theta](double, double, const PathHistory&) { return theta; };
  g.flags_ = {true, true};
  g.phi_zero_ = phi == 0.0;
  g.psi_zero_ = theta == 0.0;
  g.psi_bound_ = theta;
  return g;
}

GeneratingPair GeneratingPair::linear(double phi, double theta0, double theta1) {
  require_finite(phi, "phi");
  require_finite(theta0, "psi theta0");
  require_finite(theta1, "psi theta1");
  GeneratingPair g;
  g.name_ = "linear";
  g.phi_ = [phi](double, const PathHistory&) { return phi; };
  g.psi_ = [theta0, theta1](double, double y, const PathHistory&) { return theta0 + theta1 * y; };
  g.flags_ = {true, true};
  g.phi_zero_ = phi == 0.0;
  g.psi_zero_ = theta0 == 0.0 && theta1 == 0.0;
  g.psi_bound_ = theta0 + std::abs(theta1);
  return g;
}

GeneratingPair GeneratingPair::tabulated(double phi, std::vector<double> edges, std::vector<double> values,
                                         std::vector<std::pair<double, double>> points) {
  require_finite(phi, "phi");
  if (values.size() != edges.size() + 1) {
    throw DomainError("tabulated psi needs exactly one more value than edges");
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    require_finite(edges[i], "psi edge");
    if (i > 0 && !(edges[i] > edges[i - 1])) throw DomainError("tabulated psi edges must increase");
  }
  for (double v : values) require_finite(v, "psi value");
  for (const auto& [y, v] : points) {
    require_finite(y, "psi point");
    require_finite(v, "psi point value");
  }
  GeneratingPair g;
  g.name_ = "tabulated";
  g.phi_ = [phi](double, const PathHistory&) { return phi; };
  g.y_breaks_ = edges;
  for (const auto& pt : points) g.y_breaks_.push_back(pt.first);
  g.psi_ = [edges = std::move(edges), values, points](double, double y, const PathHistory&) {
    for (const auto& [py, pv] : points) {
      if (y == py) return pv;
    }
    auto it = std::upper_bound(edges.begin(), edges.end(), y);
    return values[static_cast<std::size_t>(it - edges.begin())];
  };
  g.flags_ = {true, true};
  g.phi_zero_ = phi == 0.0;
  g.psi_zero_ = points.empty() && std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
  g.psi_bound_ = *std::max_element(values.begin(), values.end());
  for (const auto& pt : points) g.psi_bound_ = std::max(g.psi_bound_, pt.second);
  return g;
}

GeneratingPair GeneratingPair::custom(std::string name, PhiFn phi, PsiFn psi, Flags flags, double psi_bound,
                                      std::vector<double> y_breaks) {
  if (!phi || !psi) throw DomainError("generating pair needs both evaluators");
  require_finite(psi_bound, "psi bound");
  GeneratingPair g;
  g.name_ = std::move(name);
  g.phi_ = std::move(phi);
  g.psi_ = std::move(psi);
  g.flags_ = flags;
  g.psi_bound_ = psi_bound;
  g.y_breaks_ = std::move(y_breaks);
  return g;
}

}  // namespace levyhjm
