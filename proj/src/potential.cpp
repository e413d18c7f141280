#include "vpfp/potential.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "vpfp/errors.hpp"

namespace vpfp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Fritsch-Carlson node slopes, same shape rules as the usual PCHIP.
std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> h(n - 1), delta(n - 1), d(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x[k + 1] - x[k];
    delta[k] = (y[k + 1] - y[k]) / h[k];
  }
  if (n == 2) {
    d[0] = d[1] = delta[0];
    return d;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (delta[k - 1] * delta[k] <= 0.0) continue;
    const double w1 = 2.0 * h[k] + h[k - 1];
    const double w2 = h[k] + 2.0 * h[k - 1];
    d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
  }
  auto end_slope = [](double h0, double h1, double m0, double m1) {
    double s = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if (std::signbit(s) != std::signbit(m0)) {
      s = 0.0;
    } else if (std::signbit(m0) != std::signbit(m1) && std::abs(s) > 3.0 * std::abs(m0)) {
      s = 3.0 * m0;
    }
    return s;
  };
  d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  return d;
}

}  // namespace

PotentialSpec PotentialSpec::power_law(double alpha, double domain_radius) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("power_law requires alpha > 0");
  if (!(domain_radius > 0.0)) throw DomainError("domain_radius must be positive");
  PotentialSpec s;
  s.family_ = PotentialFamily::power_law;
  s.alpha_ = alpha;
  s.radius_ = domain_radius;
  return s;
}

PotentialSpec PotentialSpec::tabulated(std::vector<double> x, std::vector<double> v,
                                       double domain_radius) {
  if (x.size() != v.size()) throw ShapeError("table columns differ in length");
  if (x.size() < 4) throw DomainError("tabulated potential needs at least 4 nodes");
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!std::isfinite(x[k]) || !std::isfinite(v[k])) throw DomainError("non-finite table entry");
    if (k > 0 && !(x[k] > x[k - 1])) throw DomainError("table nodes must be strictly increasing");
  }
  if (!(domain_radius > 0.0)) throw DomainError("domain_radius must be positive");
  if (x.front() > -domain_radius || x.back() < domain_radius)
    throw DomainError("table does not cover [-domain_radius, domain_radius]");
  PotentialSpec s;
  s.family_ = PotentialFamily::tabulated;
  s.alpha_ = std::numeric_limits<double>::quiet_NaN();
  s.radius_ = domain_radius;
  s.slope_ = pchip_slopes(x, v);
  s.tx_ = std::move(x);
  s.tv_ = std::move(v);
  return s;
}

PotentialSpec PotentialSpec::load_table(const std::filesystem::path& path, double domain_radius) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open potential table " + path.string());
  std::vector<double> x, v;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    for (char& c : line)
      if (c == ',' || c == '\t') c = ' ';
    std::istringstream ls(line);
    double a, b;
    if (!(ls >> a)) continue;
    if (!(ls >> b)) throw ConfigError("potential table needs two columns", lineno);
    x.push_back(a);
    v.push_back(b);
  }
  return tabulated(std::move(x), std::move(v), domain_radius);
}

bool PotentialSpec::admissible_regime() const {
  return family_ == PotentialFamily::tabulated || alpha_ > 1.0;
}

PotentialValue PotentialSpec::eval(double x) const {
  if (!std::isfinite(x)) throw DomainError("potential evaluated at non-finite x");
  PotentialValue out;
  if (family_ == PotentialFamily::power_law) {
    const double a = alpha_;
    const double ax = std::abs(x);
    if (ax == 0.0) {
      out.V = 0.0;
      out.dV = 0.0;
      if (a < 2.0) {
        out.d2V = kInf;
        out.singular_origin = true;
      } else {
        out.d2V = (a == 2.0) ? 2.0 : 0.0;
      }
      return out;
    }
    const double p = std::pow(ax, a - 2.0);
    out.V = p * ax * ax;
    out.dV = a * p * ax * (x > 0 ? 1.0 : -1.0);
    out.d2V = a * (a - 1.0) * p;
    return out;
  }
  if (x < tx_.front() || x > tx_.back()) throw DomainError("x outside the tabulated range");
  auto it = std::upper_bound(tx_.begin(), tx_.end(), x);
  std::size_t k = static_cast<std::size_t>(std::distance(tx_.begin(), it));
  k = std::clamp<std::size_t>(k, 1, tx_.size() - 1) - 1;
  const double h = tx_[k + 1] - tx_[k];
  const double delta = (tv_[k + 1] - tv_[k]) / h;
  const double d0 = slope_[k], d1 = slope_[k + 1];
  const double c2 = (3.0 * delta - 2.0 * d0 - d1) / h;
  const double c3 = (d0 + d1 - 2.0 * delta) / (h * h);
  const double s = x - tx_[k];
  out.V = tv_[k] + s * (d0 + s * (c2 + s * c3));
  out.dV = d0 + s * (2.0 * c2 + 3.0 * c3 * s);
  out.d2V = 2.0 * c2 + 6.0 * c3 * s;
  return out;
}

std::string PotentialSpec::describe() const {
  std::ostringstream os;
  if (family_ == PotentialFamily::power_law)
    os << "|x|^" << alpha_;
  else
    os << "tabulated(" << tx_.size() << " nodes)";
  os << " on [-" << radius_ << ", " << radius_ << "]";
  return os.str();
}

PotentialValue eval_potential(const PotentialSpec& spec, double x) { return spec.eval(x); }

double schrodinger_potential(const PotentialSpec& spec, double x) {
  const auto p = spec.eval(x);
  return 0.25 * p.dV * p.dV - 0.5 * p.d2V;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::marginal: return "marginal";
    case Verdict::fail: return "fail";
  }
  return "?";
}

std::vector<double> ProbeGrid::radii() const {
  std::vector<double> r;
  for (int j = 0; j <= levels; ++j) r.push_back(r0 * std::ldexp(1.0, j));
  return r;
}

ProbeGrid ProbeGrid::for_radius(double domain_radius, int levels) {
  return ProbeGrid{domain_radius / std::ldexp(1.0, levels), levels};
}

bool AssumptionReport::admissible() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const AssumptionEntry& e) { return e.verdict == Verdict::pass; });
}

const AssumptionEntry& AssumptionReport::at(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw DomainError("no assumption named " + name);
}

namespace {

constexpr double kMargin = 1e-6;

struct Tail {
  double a, b, c;  // last three witnesses
  double d1() const { return b - a; }
  double d2() const { return c - b; }
};

Tail tail_of(const std::vector<double>& w) {
  const std::size_t n = w.size();
  return {w[n - 3], w[n - 2], w[n - 1]};
}

bool finite3(const Tail& t) {
  return std::isfinite(t.a) && std::isfinite(t.b) && std::isfinite(t.c);
}

bool contracting(const Tail& t) { return std::abs(t.d2()) <= 0.75 * std::abs(t.d1()); }

// Eventually above thr, trending up (or converging to a limit above thr).
Verdict verdict_above(const std::vector<double>& w, double thr) {
  const Tail t = tail_of(w);
  if (!finite3(t)) {
    if (t.a == kInf && t.b == kInf && t.c == kInf) return Verdict::pass;
    return Verdict::marginal;
  }
  const double lo = thr + kMargin, hi = thr - kMargin;
  if (t.a > lo && t.b > lo && t.c > lo) {
    const double scale = 1e-12 * (1.0 + std::abs(t.c));
    if (t.d2() >= -scale) return Verdict::pass;
    if (contracting(t) && t.c - 3.0 * std::abs(t.d2()) > lo) return Verdict::pass;
    return Verdict::marginal;
  }
  if (t.a < hi && t.b < hi && t.c < hi) return Verdict::fail;
  return Verdict::marginal;
}

Verdict verdict_below(const std::vector<double>& w, double thr) {
  std::vector<double> neg(w.size());
  std::transform(w.begin(), w.end(), neg.begin(), [](double v) { return -v; });
  return verdict_above(neg, -thr);
}

// Finite limsup: increments contract or the witness decreases.
Verdict verdict_bounded(const std::vector<double>& w) {
  const Tail t = tail_of(w);
  if (!finite3(t)) return Verdict::fail;
  const double scale = 1e-9 * (1.0 + std::abs(t.c));
  if (t.d2() <= scale || contracting(t)) return Verdict::pass;
  if (t.d1() > 0.0 && t.d2() > 1.25 * t.d1()) return Verdict::fail;
  return Verdict::marginal;
}

// Divergence to +infinity: increasing with increments that do not die out.
Verdict verdict_diverging(const std::vector<double>& w) {
  const Tail t = tail_of(w);
  if (!finite3(t)) return Verdict::marginal;
  if (t.d1() > 0.0 && t.d2() > 0.0 && t.d2() >= 0.75 * t.d1()) return Verdict::pass;
  if (t.d1() < 0.0 && t.d2() < 0.0) return Verdict::fail;
  return Verdict::marginal;
}

Verdict worst(Verdict a, Verdict b) { return static_cast<int>(a) > static_cast<int>(b) ? a : b; }

// Largest relative jump of the interpolant's V'' across table nodes in [r_lo, r_hi].
double table_curvature_jump(const PotentialSpec& spec, double r_lo, double r_hi) {
  double worst_jump = 0.0;
  const auto& x = spec.table_x();
  for (std::size_t k = 1; k + 1 < x.size(); ++k) {
    const double ax = std::abs(x[k]);
    if (ax < r_lo || ax > r_hi) continue;
    const double h = 1e-9 * (1.0 + ax);
    const double left = spec.eval(x[k] - h).d2V;
    const double right = spec.eval(x[k] + h).d2V;
    worst_jump = std::max(worst_jump,
                          std::abs(right - left) / std::max(1.0, std::abs(0.5 * (left + right))));
  }
  return worst_jump;
}

}  // namespace

AssumptionReport check_confinement_assumptions(const PotentialSpec& spec, double mass,
                                               const ProbeGrid& probe) {
  if (!(mass > 0.0)) throw DomainError("mass must be positive");
  const auto radii = probe.radii();
  if (radii.size() < 3) throw DomainError("probe grid needs at least three radii");
  if (radii.back() > spec.domain_radius() * (1.0 + 1e-12))
    throw DomainError("probe radii exceed the domain radius");

  auto both = [&](double r, auto&& f, bool take_min) {
    const double a = f(spec.eval(r), r), b = f(spec.eval(-r), r);
    return take_min ? std::min(a, b) : std::max(a, b);
  };
  auto collect = [&](auto&& f, bool take_min) {
    std::vector<double> w;
    for (double r : radii) w.push_back(both(r, f, take_min));
    return w;
  };

  AssumptionReport rep;
  auto add = [&](std::string name, std::vector<double> w, double thr, Verdict v, std::string note) {
    rep.entries.push_back({std::move(name), radii, std::move(w), thr, v, std::move(note)});
  };

  const auto grad = collect([](const PotentialValue& p, double) { return std::abs(p.dV); }, true);
  const Verdict grad_ok = verdict_above(grad, 0.0);

  {
    auto w = collect([](const PotentialValue& p, double) { return p.V; }, true);
    Verdict v = verdict_diverging(w);
    std::string note;
    if (spec.family() == PotentialFamily::power_law && spec.alpha() <= 1.0) {
      v = Verdict::fail;
      note = "V'' is not locally integrable at the origin for alpha <= 1";
    }
    add("V1", std::move(w), kInf, v, note);
  }
  {
    auto w = collect(
        [mass](const PotentialValue& p, double r) {
          const double lr = std::log(r);
          if (lr <= 0.0) return -kInf;
          return (p.V - 0.5 * mass * r) / lr;
        },
        true);
    const Verdict v = verdict_above(w, 2.0);
    add("V2", std::move(w), 2.0, v, "");
  }
  {
    auto w = collect([](const PotentialValue& p, double) { return 0.25 * p.dV * p.dV - 0.5 * p.d2V; },
                     true);
    const Verdict v = worst(verdict_above(w, 0.0), grad_ok);
    add("V3a", std::move(w), 0.0, v, "witness Phi = V'^2/4 - V''/2; |V'| tail checked jointly");
  }
  {
    auto w = collect([](const PotentialValue& p, double) { return 2.0 * p.d2V / (p.dV * p.dV); },
                     false);
    const Verdict v = worst(verdict_below(w, 1.0), grad_ok);
    rep.theta_3b = std::max(0.0, w.back());
    add("V3b", std::move(w), 1.0, v, "witness: smallest admissible theta, 2V''/V'^2");
  }
  {
    auto w = collect(
        [mass](const PotentialValue& p, double) {
          const double s = mass - 2.0 * std::abs(p.dV);
          return s * s - 2.0 * p.d2V;
        },
        true);
    const Verdict v = verdict_above(w, 0.0);
    add("V4", std::move(w), 0.0, v, "witness (M - 2|V'|)^2 - 2V''");
  }
  {
    auto w = collect([](const PotentialValue& p, double) { return 6.0 * p.d2V / (p.dV * p.dV); },
                     false);
    const Verdict v = worst(verdict_below(w, 1.0), grad_ok);
    rep.theta_5 = std::max(0.0, w.back());
    add("V5", std::move(w), 1.0, v, "witness: smallest admissible theta, 6V''/V'^2");
  }
  {
    auto w = collect(
        [](const PotentialValue& p, double) {
          return 0.5 * (p.dV * p.dV - p.d2V) / (p.dV * p.dV);
        },
        false);
    const Verdict v = verdict_bounded(w);
    rep.Lambda_V = w.back();
    add("V6", std::move(w), kInf, v, "witness (V'^2 - V'')/(2 V'^2)");
  }
  {
    auto w = collect([](const PotentialValue& p, double) { return std::abs(2.0 * p.d2V / p.dV); },
                     false);
    const Verdict v = verdict_bounded(w);
    rep.log_gradient_bound = w.back();
    add("V7", std::move(w), kInf, v, "witness |(log V'^2)'|");
  }
  {
    auto w = collect(
        [](const PotentialValue& p, double) {
          const double e = std::exp(-p.V);
          const double g = 2.0 * p.dV * p.d2V;
          return std::max(p.dV * p.dV * e, g * g * e);
        },
        false);
    const Verdict v = verdict_bounded(w);
    add("V8", std::move(w), kInf, v, "witness max(V'^2 e^-V, ((V'^2)')^2 e^-V) on the tail");
    // Sup norms over the whole domain on an origin-offset sample.
    const int n = 4000;
    const double X = spec.domain_radius();
    for (int i = 0; i < n; ++i) {
      const double x = -X + (i + 0.5) * (2.0 * X / n);
      const auto p = spec.eval(x);
      const double e = std::exp(-p.V);
      const double g = 2.0 * p.dV * p.d2V;
      rep.grad_sq_weight_sup = std::max(rep.grad_sq_weight_sup, p.dV * p.dV * e);
      rep.dgrad_sq_weight_sup = std::max(rep.dgrad_sq_weight_sup, g * g * e);
    }
  }

  {
    const double r_lo = radii[radii.size() - 2], r_hi = radii.back();
    double sigma = kInf;
    const int m = 64;
    for (int i = 0; i <= m; ++i) {
      const double r = r_lo + (r_hi - r_lo) * i / m;
      sigma = std::min({sigma, schrodinger_potential(spec, r), schrodinger_potential(spec, -r)});
    }
    rep.sigma_V = sigma;
  }

  if (spec.family() == PotentialFamily::tabulated) {
    const double jump = table_curvature_jump(spec, radii[radii.size() - 3], radii.back());
    if (jump > 5e-2) {
      for (auto& e : rep.entries) {
        if (e.name == "V1" || e.name == "V2") continue;
        if (e.verdict == Verdict::pass) {
          e.verdict = Verdict::marginal;
          e.note += (e.note.empty() ? "" : "; ");
          e.note += "interpolated V'' jumps across table nodes on the tail";
        }
      }
    }
  }
  return rep;
}

}  // namespace vpfp
