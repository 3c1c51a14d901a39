#include "levyhjm/hedging.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "levyhjm/errors.hpp"
#include "levyhjm/girsanov.hpp"
#include "levyhjm/parallel.hpp"

namespace levyhjm {

// ----------------------------------------------------------------- portfolio

Portfolio Portfolio::buy_and_hold(std::vector<std::size_t> nodes, std::vector<double> amounts) {
  if (nodes.size() != amounts.size()) throw DomainError("portfolio: one amount per maturity node");
  Portfolio p;
  p.nodes = std::move(nodes);
  for (double a : amounts) {
    p.quantities.push_back([a](const HedgeState&) { return a; });
    p.bound = std::max(p.bound, std::abs(a));
  }
  return p;
}

double Portfolio::pairing(std::span<const double> c, std::span<const double> h) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) acc += c[j] * h[nodes[j]];
  return acc;
}

void Portfolio::validate(std::size_t n_nodes) const {
  if (nodes.size() != quantities.size()) throw DomainError("portfolio: one quantity process per maturity node");
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    if (nodes[j] >= n_nodes) throw MaturityError("portfolio: maturity node outside the surface grid");
    if (!quantities[j]) throw DomainError("portfolio: missing quantity process");
    if (j > 0 && !(nodes[j] > nodes[j - 1])) throw MaturityError("portfolio: maturity nodes must increase");
  }
  if (!(bound >= 0.0)) throw DomainError("portfolio: bound must be >= 0");
}

// --------------------------------------------------------------------- claims

ClaimRepresentation ClaimRepresentation::constant(double value) {
  ClaimRepresentation c;
  c.name = "constant";
  c.m0 = value;
  c.f_x = [](double, const PathHistory&) { return 0.0; };
  c.payoff = [value](const LevyPath&, const ForwardSurface&) { return value; };
  return c;
}

ClaimRepresentation ClaimRepresentation::bond_payoff(std::size_t node) {
  ClaimRepresentation c;
  c.name = "bond_payoff";
  c.payoff = [node](const LevyPath&, const ForwardSurface& s) {
    if (node >= s.n_maturities()) throw MaturityError("bond payoff: maturity node outside the surface grid");
    return s.discounted(s.grid->steps(), node);
  };
  return c;
}

ClaimRepresentation ClaimRepresentation::jump_integral(GeneralIntegrand g, const GeneratingPair& pair,
                                                       const LevyMeasure& nu) {
  ClaimRepresentation c;
  c.name = g.name.empty() ? "jump_integral" : g.name;
  c.f_x = [](double, const PathHistory&) { return 0.0; };
  c.g_x = g;
  auto shared_pair = std::make_shared<GeneratingPair>(pair);
  c.payoff = [g, shared_pair, nu](const LevyPath& path, const ForwardSurface&) {
    return integrate_general(g, path, nu, Compensator::Q(*shared_pair)).final_value();
  };
  return c;
}

// -------------------------------------------------------------------- wealth

namespace {

// Per-step increments of unit holdings in each listed node.
struct UnitIncrements {
  std::size_t n_nodes = 0;
  std::vector<double> brownian;     // steps x nodes
  std::vector<double> jumps;        // steps x nodes
  std::vector<double> compensator;  // steps x nodes
};

UnitIncrements unit_increments(const MarketModel& model, const ForwardSurface& surface, const LevyPath& path,
                               std::span<const std::size_t> nodes) {
  const auto& grid = *model.grid();
  const auto& spec = model.spec();
  const double q = spec.triplet.q;
  const std::size_t nn = nodes.size();
  const std::size_t nm = surface.n_maturities();
  UnitIncrements out;
  out.n_nodes = nn;
  out.brownian.assign(grid.steps() * nn, 0.0);
  out.jumps.assign(grid.steps() * nn, 0.0);
  out.compensator.assign(grid.steps() * nn, 0.0);
  std::size_t j = 0;
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const double t = grid[k];
    const double dt = grid.dt(k);
    const PathHistory h(path, t, true);
    const double phi = q == 0.0 ? 0.0 : spec.pair.phi(t, h);
    const double dw = (path.brownian[k + 1] - path.brownian[k]) - q * phi * dt;
    for (std::size_t c = 0; c < nn; ++c) {
      const std::size_t m = nodes[c];
      const double big = surface.sigma[surface.index(k, m)];
      if (big == 0.0) continue;
      const double p = surface.discounted(k, m);
      out.brownian[k * nn + c] = -p * big * dw;
      double comp = 0.0;
      try {
        comp = model.jump_compensator(surface, k, m, h);
      } catch (const MomentError& e) {
        throw ClassError(std::string("wealth jump integrand is not in Psi12Q: ") + e.what());
      }
      out.compensator[k * nn + c] = p * comp * dt;
    }
    for (; j < surface.jumps.size() && surface.jump_step[j] == k; ++j) {
      const double y = surface.jumps[j].size;
      for (std::size_t c = 0; c < nn; ++c) {
        const std::size_t m = nodes[c];
        out.jumps[k * nn + c] +=
            std::exp(surface.jump_log_p_hat[j * nm + m]) * std::expm1(-surface.jump_sigma[j * nm + m] * y);
      }
    }
  }
  return out;
}

HedgeState state_at(const ForwardSurface& surface, const LevyPath& path, std::size_t k) {
  const std::size_t nm = surface.n_maturities();
  HedgeState st;
  st.t = (*surface.grid)[k];
  st.step = k;
  st.log_p_hat = std::span<const double>(surface.log_p_hat).subspan(k * nm, nm);
  st.sigma = std::span<const double>(surface.sigma).subspan(k * nm, nm);
  st.history = PathHistory(path, st.t, true);
  return st;
}

std::vector<double> quantities_at(const Portfolio& portfolio, const HedgeState& st) {
  std::vector<double> c(portfolio.nodes.size());
  for (std::size_t j = 0; j < c.size(); ++j) {
    c[j] = portfolio.quantities[j](st);
    if (!std::isfinite(c[j]) || (portfolio.bound > 0.0 && std::abs(c[j]) > portfolio.bound * (1.0 + 1e-12))) {
      std::ostringstream os;
      os << "portfolio: quantity " << c[j] << " at t = " << st.t << " exceeds the declared bound " << portfolio.bound;
      throw BoundError(os.str());
    }
  }
  return c;
}

}  // namespace

WealthPath wealth_path(const Portfolio& portfolio, const MarketModel& model, const ForwardSurface& surface,
                       const LevyPath& path, double x0) {
  portfolio.validate(surface.n_maturities());
  const auto& grid = *model.grid();
  const std::size_t nn = portfolio.nodes.size();
  const auto inc = unit_increments(model, surface, path, portfolio.nodes);
  WealthPath w;
  w.values.assign(grid.size(), x0);
  w.brownian.assign(grid.size(), 0.0);
  w.jumps.assign(grid.size(), 0.0);
  w.compensator.assign(grid.size(), 0.0);
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const auto c = quantities_at(portfolio, state_at(surface, path, k));
    double b = 0.0, jm = 0.0, cp = 0.0;
    for (std::size_t j = 0; j < nn; ++j) {
      b += c[j] * inc.brownian[k * nn + j];
      jm += c[j] * inc.jumps[k * nn + j];
      cp += c[j] * inc.compensator[k * nn + j];
    }
    w.brownian[k + 1] = w.brownian[k] + b;
    w.jumps[k + 1] = w.jumps[k] + jm;
    w.compensator[k + 1] = w.compensator[k] + cp;
    w.values[k + 1] = w.values[k] + b + jm - cp;
  }
  return w;
}

ClassCheck admissibility_check(const Portfolio& portfolio, const MarketModel& model, const ForwardSurface& surface,
                               const LevyPath& path) {
  portfolio.validate(surface.n_maturities());
  const auto grid = model.grid();
  const std::size_t nm = surface.n_maturities();
  GeneralIntegrand g;
  g.name = "wealth jump integrand";
  g.cls = IntegrandClass::Psi12Q;
  g.g = [&](double s, double y, const PathHistory& h) {
    // Step k with t_k < s <= t_{k+1}; quantities read the path through t_k.
    std::size_t k = grid->floor_index(s);
    if (k > 0 && (*grid)[k] == s) --k;
    k = std::min(k, grid->steps() - 1);
    HedgeState st;
    st.t = (*grid)[k];
    st.step = k;
    st.log_p_hat = std::span<const double>(surface.log_p_hat).subspan(k * nm, nm);
    st.sigma = std::span<const double>(surface.sigma).subspan(k * nm, nm);
    st.history = h.empty() ? h : h.truncated(st.t, true);
    const auto c = quantities_at(portfolio, st);
    double acc = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      const std::size_t m = portfolio.nodes[j];
      acc += c[j] * std::exp(st.log_p_hat[m]) * std::expm1(-st.sigma[m] * y);
    }
    return acc;
  };
  std::vector<double> breaks(grid->times().begin(), grid->times().end());
  g.s_breaks = breaks;
  return class_check(g, model.spec().triplet.nu, &model.spec().pair, IntegrandClass::Psi12Q, grid->horizon(), &path);
}

ReplicationResiduals replication_equations_residual(const Portfolio& portfolio, const MarketModel& model,
                                                    const ForwardSurface& surface, const ClaimRepresentation& claim,
                                                    const LevyPath& path, std::size_t step,
                                                    std::span<const double> probes) {
  portfolio.validate(surface.n_maturities());
  const auto& grid = *model.grid();
  if (step >= grid.steps()) throw DomainError("replication residual: step outside the grid");
  const auto st = state_at(surface, path, step);
  const auto c = quantities_at(portfolio, st);
  const double s = grid[step] + 0.5 * grid.dt(step);
  const PathHistory strict(path, s);

  ReplicationResiduals out;
  double brownian = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    const std::size_t m = portfolio.nodes[j];
    brownian += c[j] * std::exp(st.log_p_hat[m]) * st.sigma[m];
  }
  const double f = claim.f_x ? claim.f_x(s, strict) : 0.0;
  out.eq2 = std::abs(brownian + f);
  out.eq3.reserve(probes.size());
  for (double y : probes) {
    double jump = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      const std::size_t m = portfolio.nodes[j];
      jump += c[j] * std::exp(st.log_p_hat[m]) * std::expm1(-st.sigma[m] * y);
    }
    const double gx = claim.g_x.g ? claim.g_x.g(s, y, strict) : 0.0;
    out.eq3.push_back(std::abs(jump - gx));
  }
  return out;
}

// ------------------------------------------------------------- hedge problem

HedgeProblem HedgeProblem::restricted(std::vector<std::size_t> nodes, std::size_t buckets) const {
  if (buckets == 0 || basis.buckets % buckets != 0) {
    throw DomainError("hedge basis: bucket count must divide the current one");
  }
  std::vector<std::size_t> source(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const auto it = std::find(basis.nodes.begin(), basis.nodes.end(), nodes[j]);
    if (it == basis.nodes.end()) throw MaturityError("hedge basis: node not in the sampled basis");
    source[j] = static_cast<std::size_t>(it - basis.nodes.begin());
  }
  HedgeProblem out;
  out.basis = {std::move(nodes), buckets};
  out.n_paths = n_paths;
  out.seed = seed;
  out.claim_names = claim_names;
  out.weights = weights;
  out.claims = claims;
  const std::size_t factor = basis.buckets / buckets;
  const std::size_t p = out.basis.size();
  out.gains.assign(n_paths * p, 0.0);
  for (std::size_t i = 0; i < n_paths; ++i) {
    for (std::size_t j = 0; j < source.size(); ++j) {
      for (std::size_t b = 0; b < buckets; ++b) {
        double acc = 0.0;
        for (std::size_t f = 0; f < factor; ++f) acc += gain(i, source[j] * basis.buckets + b * factor + f);
        out.gains[i * p + j * buckets + b] = acc;
      }
    }
  }
  return out;
}

HedgeProblem build_hedge_problem(const MarketModel& model, const std::vector<ClaimRepresentation>& claims,
                                 const HedgeBasis& basis, const McConfig& mc) {
  const auto& grid = model.grid();
  if (basis.buckets == 0 || grid->steps() % basis.buckets != 0) {
    throw DomainError("hedge basis: the step count must be divisible by the bucket count");
  }
  for (std::size_t j = 0; j < basis.nodes.size(); ++j) {
    if (basis.nodes[j] >= model.maturities().size()) throw MaturityError("hedge basis: node outside the maturity grid");
  }
  if (claims.empty()) throw DomainError("hedge: no claims");
  if (mc.n_paths < 2) throw DomainError("hedge: need at least two paths");
  const auto& spec = model.spec();
  DensityModel density(spec.pair, spec.triplet, grid);

  const std::size_t p = basis.size();
  const std::size_t nc = claims.size();
  const std::size_t per_bucket = grid->steps() / basis.buckets;
  struct Sample {
    double rho = 0.0;
    std::vector<double> x, g;
  };
  auto samples = parallel_map<Sample>(
      mc.n_paths,
      [&](std::size_t i) {
        const auto path = simulate_path(spec.triplet, grid, {mc.seed, i});
        const auto surface = model.evolve(path);
        Sample s;
        s.rho = density.path(path).final_rho();
        s.x.resize(nc);
        for (std::size_t c = 0; c < nc; ++c) s.x[c] = claims[c].payoff(path, surface);
        const auto inc = unit_increments(model, surface, path, basis.nodes);
        const std::size_t nn = basis.nodes.size();
        s.g.assign(p, 0.0);
        for (std::size_t k = 0; k < grid->steps(); ++k) {
          const std::size_t b = k / per_bucket;
          for (std::size_t j = 0; j < nn; ++j) {
            s.g[j * basis.buckets + b] +=
                inc.brownian[k * nn + j] + inc.jumps[k * nn + j] - inc.compensator[k * nn + j];
          }
        }
        return s;
      },
      mc.threads);

  HedgeProblem out;
  out.basis = basis;
  out.n_paths = mc.n_paths;
  out.seed = mc.seed;
  for (const auto& c : claims) out.claim_names.push_back(c.name);
  std::vector<double> rho(mc.n_paths);
  for (std::size_t i = 0; i < mc.n_paths; ++i) rho[i] = samples[i].rho;
  const double total = pairwise_sum(rho);
  out.weights.resize(mc.n_paths);
  out.claims.resize(mc.n_paths * nc);
  out.gains.resize(mc.n_paths * p);
  for (std::size_t i = 0; i < mc.n_paths; ++i) {
    out.weights[i] = rho[i] / total;
    std::copy(samples[i].x.begin(), samples[i].x.end(), out.claims.begin() + static_cast<std::ptrdiff_t>(i * nc));
    std::copy(samples[i].g.begin(), samples[i].g.end(), out.gains.begin() + static_cast<std::ptrdiff_t>(i * p));
  }
  return out;
}

// --------------------------------------------------------------------- solve

namespace {

double weighted_sum(const HedgeProblem& problem, const std::function<double(std::size_t)>& term) {
  std::vector<double> v(problem.n_paths);
  for (std::size_t i = 0; i < problem.n_paths; ++i) v[i] = problem.weights[i] * term(i);
  return pairwise_sum(v);
}

double residual(const HedgeProblem& problem, std::size_t i, std::size_t claim, double x0,
                std::span<const double> beta) {
  double r = problem.claim(i, claim) - x0;
  for (std::size_t j = 0; j < beta.size(); ++j) r -= beta[j] * problem.gain(i, j);
  return r;
}

}  // namespace

double hedge_objective(const HedgeProblem& problem, std::size_t claim, double x0, std::span<const double> beta,
                       double lambda) {
  if (beta.size() != problem.basis.size()) throw DomainError("hedge objective: wrong coefficient count");
  double penalty = 0.0;
  for (double b : beta) penalty += b * b;
  return weighted_sum(problem,
                      [&](std::size_t i) {
                        const double r = residual(problem, i, claim, x0, beta);
                        return r * r;
                      }) +
         lambda * penalty;
}

HedgeReport solve_hedge(const HedgeProblem& problem, std::size_t claim, double reg_scale) {
  if (claim >= problem.n_claims()) throw DomainError("hedge: claim index out of range");
  const std::size_t p = problem.basis.size();
  HedgeReport out;
  out.claim = problem.claim_names[claim];
  out.n_paths = problem.n_paths;
  out.initial_cost = weighted_sum(problem, [&](std::size_t i) { return problem.claim(i, claim); });
  const double x0 = out.initial_cost;

  Eigen::MatrixXd gram(p, p);
  Eigen::VectorXd rhs(p);
  parallel_for(p, [&](std::size_t a) {
    for (std::size_t b = a; b < p; ++b) {
      const double v = weighted_sum(problem, [&](std::size_t i) { return problem.gain(i, a) * problem.gain(i, b); });
      gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
      gram(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
    }
    rhs(static_cast<Eigen::Index>(a)) =
        weighted_sum(problem, [&](std::size_t i) { return problem.gain(i, a) * (problem.claim(i, claim) - x0); });
  });

  out.coefficients.assign(p, 0.0);
  if (p > 0) {
    const double trace = gram.trace();
    if (!(trace > 0.0) || !std::isfinite(trace)) {
      throw SingularityError("hedge: the Gram matrix of basis gains is zero or not finite");
    }
    out.regularization = reg_scale * trace / static_cast<double>(p);
    gram.diagonal().array() += out.regularization;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw SingularityError("hedge: regularized Gram matrix is not positive definite");
    const Eigen::VectorXd beta = llt.solve(rhs);
    for (std::size_t j = 0; j < p; ++j) {
      out.coefficients[j] = beta(static_cast<Eigen::Index>(j));
      if (!std::isfinite(out.coefficients[j])) throw SingularityError("hedge: non-finite coefficients");
    }
  }

  const std::span<const double> beta(out.coefficients);
  out.residual_mean = weighted_sum(problem, [&](std::size_t i) { return residual(problem, i, claim, x0, beta); });
  out.residual_variance = weighted_sum(problem, [&](std::size_t i) {
    const double r = residual(problem, i, claim, x0, beta) - out.residual_mean;
    return r * r;
  });
  out.residual_l2 = std::sqrt(hedge_objective(problem, claim, x0, beta));
  out.claim_l2 = std::sqrt(weighted_sum(problem, [&](std::size_t i) {
    const double x = problem.claim(i, claim);
    return x * x;
  }));
  out.claim_std = std::sqrt(weighted_sum(problem, [&](std::size_t i) {
    const double x = problem.claim(i, claim) - x0;
    return x * x;
  }));
  return out;
}

HedgeReport least_squares_hedge(const MarketModel& model, const ClaimRepresentation& claim, const HedgeBasis& basis,
                                const McConfig& mc, double reg_scale) {
  return solve_hedge(build_hedge_problem(model, {claim}, basis, mc), 0, reg_scale);
}

}  // namespace levyhjm
