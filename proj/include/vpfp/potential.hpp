#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace vpfp {

enum class PotentialFamily { power_law, tabulated };

struct PotentialValue {
  double V = 0.0;
  double dV = 0.0;
  double d2V = 0.0;
  // Set at x = 0 for alpha < 2, where V'' is reported as its one-sided limit.
  bool singular_origin = false;
};

class PotentialSpec {
 public:
  static PotentialSpec power_law(double alpha, double domain_radius);
  // Nodes must be strictly increasing and cover [-domain_radius, domain_radius].
  static PotentialSpec tabulated(std::vector<double> x, std::vector<double> v, double domain_radius);
  // Two-column text file (x, V); '#' starts a comment.
  static PotentialSpec load_table(const std::filesystem::path& path, double domain_radius);

  PotentialFamily family() const { return family_; }
  double alpha() const { return alpha_; }
  double domain_radius() const { return radius_; }
  bool admissible_regime() const;
  const std::vector<double>& table_x() const { return tx_; }
  const std::vector<double>& table_v() const { return tv_; }

  PotentialValue eval(double x) const;
  std::string describe() const;

 private:
  PotentialFamily family_ = PotentialFamily::power_law;
  double alpha_ = 2.0;
  double radius_ = 1.0;
  std::vector<double> tx_;
  std::vector<double> tv_;
  std::vector<double> slope_;  // PCHIP node derivatives
};

PotentialValue eval_potential(const PotentialSpec& spec, double x);

// Phi = V'^2/4 - V''/2.
double schrodinger_potential(const PotentialSpec& spec, double x);

enum class Verdict { pass, marginal, fail };
const char* to_string(Verdict v);

struct ProbeGrid {
  double r0 = 0.5;
  int levels = 4;  // radii r0 * 2^j, j = 0..levels

  std::vector<double> radii() const;
  // Last probe at the domain radius, levels + 1 probes in total.
  static ProbeGrid for_radius(double domain_radius, int levels = 4);
};

struct AssumptionEntry {
  std::string name;
  std::vector<double> radii;
  std::vector<double> witness;
  double threshold = 0.0;
  Verdict verdict = Verdict::fail;
  std::string note;
};

struct AssumptionReport {
  std::vector<AssumptionEntry> entries;
  double sigma_V = 0.0;
  double theta_3b = 0.0;
  double theta_5 = 0.0;
  double Lambda_V = 0.0;
  double log_gradient_bound = 0.0;
  double grad_sq_weight_sup = 0.0;
  double dgrad_sq_weight_sup = 0.0;

  bool admissible() const;
  const AssumptionEntry& at(const std::string& name) const;
};

AssumptionReport check_confinement_assumptions(const PotentialSpec& spec, double mass,
                                               const ProbeGrid& probe);

}  // namespace vpfp
