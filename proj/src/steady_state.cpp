#include "vpfp/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "json.hpp"
#include "vpfp/errors.hpp"

namespace vpfp {

Vec cumulative_mass(const Grid1D& grid, const Vec& rho) {
  const int n = grid.size();
  if (rho.size() != n) throw ShapeError("density size does not match the grid");
  Vec m(n - 1);
  double acc = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    acc += rho[i] * grid.dx();
    m[i] = acc;
  }
  return m;
}

MacroField poisson_solve_1d(const MacroField& rho, double total_mass, const Grid1D& grid) {
  const int n = grid.size();
  if (rho.values.size() != n) throw ShapeError("density size does not match the grid");
  const double q = integrate(grid, rho.values);
  const double scale = std::max(1.0, rho.values.cwiseAbs().sum() * grid.dx());
  if (std::abs(q - total_mass) > 1e-8 * scale)
    throw InconsistentDensityError("density integrates to " + std::to_string(q) +
                                   ", declared mass " + std::to_string(total_mass));
  const Vec m = cumulative_mass(grid, rho.values);
  MacroField phi{FieldRole::potential, Vec(n), false};
  phi.values[0] = 0.0;
  for (int i = 0; i + 1 < n; ++i)
    phi.values[i + 1] = phi.values[i] + grid.dx() * (0.5 * total_mass - m[i]);
  phi.values.array() -= phi.values.maxCoeff();
  return phi;
}

double poisson_pairing(const Grid1D& grid, const Vec& rho1, const Vec& rho2) {
  return cumulative_mass(grid, rho1).dot(cumulative_mass(grid, rho2)) * grid.dx();
}

namespace {

Vec second_difference_defect(const Grid1D& grid, double mass, const Vec& phi, const Vec& rho) {
  const int n = grid.size();
  const double h = grid.dx();
  Vec d(n);
  for (int i = 0; i < n; ++i) {
    const double left = i == 0 ? 0.5 * mass : (phi[i] - phi[i - 1]) / h;
    const double right = i == n - 1 ? -0.5 * mass : (phi[i + 1] - phi[i]) / h;
    d[i] = -(right - left) / h - rho[i];
  }
  return d;
}

}  // namespace

double steady_residual(const SteadyState& s) {
  return second_difference_defect(s.grid, s.mass, s.phi, s.rho).cwiseAbs().maxCoeff();
}

void finalize_faces(SteadyState& s) {
  const int n = s.grid.size();
  s.rho_face.resize(n - 1);
  s.dW_face.resize(n - 1);
  for (int i = 0; i + 1 < n; ++i) {
    s.rho_face[i] = std::sqrt(s.rho[i] * s.rho[i + 1]);
    s.dW_face[i] = (s.W[i + 1] - s.W[i]) / s.grid.dx();
  }
}

SteadyState solve_poisson_boltzmann(const PotentialSpec& spec, double mass, const Grid1D& grid,
                                    const PoissonBoltzmannOptions& opts) {
  if (!(mass > 0.0)) throw DomainError("mass must be positive");
  if (!(opts.tol > 0.0)) throw DomainError("tolerance must be positive");
  const int n = grid.size();
  const double h = grid.dx();
  if (grid.radius() > spec.domain_radius() * (1.0 + 1e-12))
    throw DomainError("grid extends beyond the potential's domain radius");

  Vec V(n), dV(n), d2V(n);
  for (int i = 0; i < n; ++i) {
    const auto p = spec.eval(grid.node(i));
    V[i] = p.V;
    dV[i] = p.dV;
    d2V[i] = p.d2V;
  }
  const double vmin = V.minCoeff();

  // Normalised density for a trial potential; the shift by vmin keeps exp in range.
  auto density = [&](const Vec& phi) {
    Vec e = (-(V.array() - vmin) - (phi.array() - phi.minCoeff())).exp();
    return Vec(e * (mass / (e.sum() * h)));
  };

  Vec phi = Vec::Zero(n);
  if (opts.initial_phi) {
    if (opts.initial_phi->size() != n) throw ShapeError("initial potential has the wrong size");
    phi = *opts.initial_phi;
  }

  std::vector<double> history;
  Vec r_prev;
  double omega = opts.damping;
  bool converged = false;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const Vec rho = density(phi);
    const double res = second_difference_defect(grid, mass, phi, rho).cwiseAbs().maxCoeff();
    history.push_back(res);
    if (!std::isfinite(res)) break;
    if (res <= opts.tol) {
      converged = true;
      break;
    }
    const Vec r =
        poisson_solve_1d(MacroField{FieldRole::density, rho, false}, mass, grid).values - phi;
    if (it >= opts.aitken_start && r_prev.size() == n) {
      const Vec dr = r - r_prev;
      const double denom = dr.squaredNorm();
      if (denom > 0.0) omega = std::clamp(-omega * r_prev.dot(dr) / denom, 0.01, 2.0);
    }
    phi += omega * r;
    r_prev = r;
  }
  if (!converged)
    throw IterationDivergedError("Poisson-Boltzmann iteration did not converge in " +
                                     std::to_string(opts.max_iter) + " iterations",
                                 history);

  SteadyState s;
  s.grid = grid;
  s.mass = mass;
  s.alpha = spec.family() == PotentialFamily::power_law ? spec.alpha()
                                                        : std::numeric_limits<double>::quiet_NaN();
  s.iterations = it + 1;
  s.residual_history = std::move(history);
  // Mass normalisation of the additive constant, applied once at the end.
  const double shift = std::log((-(V.array() + phi.array())).exp().sum() * h / mass);
  s.phi = phi.array() + shift;
  s.W = V + s.phi;
  s.rho = (-s.W.array()).exp();
  const Vec m = cumulative_mass(grid, s.rho);
  s.dW.resize(n);
  for (int i = 0; i < n; ++i) {
    const double m_left = i == 0 ? 0.0 : m[i - 1];
    const double m_mid = m_left + 0.5 * s.rho[i] * h;
    s.dW[i] = dV[i] + 0.5 * mass - m_mid;
  }
  s.d2W = d2V - s.rho;
  finalize_faces(s);
  s.residual = steady_residual(s);
  return s;
}

void write_steady_state(const SteadyState& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "steady_state.csv");
  if (!out) throw Error("cannot write " + (dir / "steady_state.csv").string());
  out << "x,rho_star,phi_star,W_star,dW_star\n";
  char buf[256];
  for (int i = 0; i < s.grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.grid.node(i), s.rho[i],
                  s.phi[i], s.W[i], s.dW[i]);
    out << buf;
  }
  nlohmann::json j;
  j["mass"] = s.mass;
  j["residual"] = s.residual;
  j["alpha"] = std::isfinite(s.alpha) ? nlohmann::json(s.alpha) : nlohmann::json(nullptr);
  j["X_max"] = s.grid.radius();
  j["N"] = s.grid.size();
  std::ofstream side(dir / "steady_state.json");
  side << j.dump(2) << "\n";
}

SteadyState read_steady_state(const std::filesystem::path& dir) {
  std::ifstream side(dir / "steady_state.json");
  if (!side) throw Error("cannot read " + (dir / "steady_state.json").string());
  const auto j = nlohmann::json::parse(side);
  SteadyState s;
  s.grid = Grid1D(j.at("N").get<int>(), j.at("X_max").get<double>());
  s.mass = j.at("mass").get<double>();
  s.alpha = j.at("alpha").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                    : j.at("alpha").get<double>();
  const int n = s.grid.size();
  s.rho.resize(n);
  s.phi.resize(n);
  s.W.resize(n);
  s.dW.resize(n);
  std::ifstream in(dir / "steady_state.csv");
  std::string line;
  std::getline(in, line);
  for (int i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw ShapeError("steady_state.csv is truncated");
    std::istringstream ls(line);
    double vals[5];
    for (double& v : vals) {
      std::string cell;
      std::getline(ls, cell, ',');
      v = std::stod(cell);
    }
    s.rho[i] = vals[1];
    s.phi[i] = vals[2];
    s.W[i] = vals[3];
    s.dW[i] = vals[4];
  }
  // V'' is not stored; recover W'' by differencing W'.
  s.d2W.resize(n);
  const double h = s.grid.dx();
  for (int i = 0; i < n; ++i) {
    const int a = std::max(i - 1, 0), b = std::min(i + 1, n - 1);
    s.d2W[i] = (s.dW[b] - s.dW[a]) / ((b - a) * h);
  }
  finalize_faces(s);
  s.residual = steady_residual(s);
  return s;
}

}  // namespace vpfp
