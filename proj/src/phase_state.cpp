#include "vpfp/phase_state.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "vpfp/errors.hpp"

namespace vpfp {

PhaseState::PhaseState(std::shared_ptr<const SteadyState> steady, int modes, double eps)
    : steady_(std::move(steady)) {
  if (!steady_) throw DomainError("phase state needs a steady state");
  if (modes < 1) throw DomainError("phase state needs at least one mode");
  set_eps(eps);
  c_ = Coeffs::Zero(modes, steady_->grid.size());
}

void PhaseState::set_eps(double eps) {
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  eps_ = eps;
}

double PhaseState::position(int k, int i) const {
  return k % 2 == 0 ? steady_->grid.node(i) : steady_->grid.face(i);
}

bool PhaseState::same_space(const PhaseState& o) const {
  return steady_ == o.steady_ && c_.rows() == o.c_.rows() && c_.cols() == o.c_.cols();
}

namespace {
void require_same(const PhaseState& a, const PhaseState& b) {
  if (!a.same_space(b)) throw ShapeError("phase states live in different spaces");
}
}  // namespace

PhaseState& PhaseState::operator+=(const PhaseState& o) {
  require_same(*this, o);
  c_ += o.c_;
  return *this;
}

PhaseState& PhaseState::operator-=(const PhaseState& o) {
  require_same(*this, o);
  c_ -= o.c_;
  return *this;
}

PhaseState& PhaseState::operator*=(double a) {
  c_ *= a;
  return *this;
}

void PhaseState::axpy(double a, const PhaseState& o) {
  require_same(*this, o);
  c_ += a * o.c_;
}

PhaseState operator+(PhaseState a, const PhaseState& b) { return a += b; }
PhaseState operator-(PhaseState a, const PhaseState& b) { return a -= b; }
PhaseState operator*(double s, PhaseState a) { return a *= s; }

double weighted_average(const PhaseState& h) {
  const auto& s = h.steady();
  return h.coeffs().row(0).dot(s.rho.transpose()) * s.grid.dx();
}

double average_tolerance(const PhaseState& h) {
  const auto& s = h.steady();
  const double size =
      std::sqrt(s.mass * h.coeffs().row(0).array().square().matrix().dot(s.rho) * s.grid.dx());
  return 1e-10 * std::max(size, 1e-300);
}

bool has_zero_average(const PhaseState& h) {
  return std::abs(weighted_average(h)) <= average_tolerance(h);
}

void project_zero_average(PhaseState& h) {
  h.coeffs().row(0).array() -= weighted_average(h) / h.steady().mass;
}

double l2_product(const PhaseState& a, const PhaseState& b, int k_min) {
  require_same(a, b);
  const auto& s = a.steady();
  const int n = s.grid.size();
  double even = 0.0, odd = 0.0;
  for (int k = k_min; k < a.modes(); ++k) {
    const auto ra = a.coeffs().row(k), rb = b.coeffs().row(k);
    if (k % 2 == 0) {
      even += (ra.array() * rb.array()).matrix().dot(s.rho);
    } else {
      odd += (ra.head(n - 1).array() * rb.head(n - 1).array()).matrix().dot(s.rho_face);
    }
  }
  return (even + odd) * s.grid.dx();
}

double scalar_product(const PhaseState& a, const PhaseState& b) {
  require_same(a, b);
  if (!has_zero_average(a) || !has_zero_average(b))
    throw DomainError("scalar product needs zero-average states");
  const auto& s = a.steady();
  const Vec ra = a.coeffs().row(0).transpose().cwiseProduct(s.rho);
  const Vec rb = b.coeffs().row(0).transpose().cwiseProduct(s.rho);
  return l2_product(a, b) + poisson_pairing(s.grid, ra, rb);
}

double norm_sq(const PhaseState& h) { return scalar_product(h, h); }

Vec psi_prime(const PhaseState& h) {
  const auto& s = h.steady();
  return -cumulative_mass(s.grid, h.coeffs().row(0).transpose().cwiseProduct(s.rho));
}

void write_snapshot(const PhaseState& h, const std::filesystem::path& csv) {
  if (csv.has_parent_path()) std::filesystem::create_directories(csv.parent_path());
  std::ofstream out(csv);
  if (!out) throw Error("cannot write " + csv.string());
  out << "x";
  for (int k = 0; k < h.modes(); ++k) out << ",c" << k;
  out << "\n";
  char buf[64];
  for (int i = 0; i < h.points(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", h.steady().grid.node(i));
    out << buf;
    for (int k = 0; k < h.modes(); ++k) {
      std::snprintf(buf, sizeof buf, ",%.17g", h(k, i));
      out << buf;
    }
    out << "\n";
  }
  nlohmann::json j;
  j["K"] = h.modes();
  j["N"] = h.points();
  j["X_max"] = h.steady().grid.radius();
  j["eps"] = h.eps();
  j["time"] = h.time();
  j["odd_modes_at_faces"] = true;
  auto side = csv;
  side.replace_extension(".json");
  std::ofstream js(side);
  js << j.dump(2) << "\n";
}

}  // namespace vpfp
