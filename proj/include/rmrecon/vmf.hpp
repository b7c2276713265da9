#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace rmrecon {

inline constexpr double kMaxKappa = 1e4;

/// log C3(kappa) for the 3D von Mises-Fisher density C3 exp(kappa mu . x),
/// C3 = kappa / (4 pi sinh kappa). Evaluated as
/// log(kappa / 2 pi) - kappa - log(1 - exp(-2 kappa)) so that no sinh is
/// ever formed; kappa -> 0 gives log(1 / 4 pi).
double vmf_log_normalizer(double kappa);
double vmf_log_pdf(const Eigen::Vector3d& x, const Eigen::Vector3d& mu, double kappa);
double vmf_pdf(const Eigen::Vector3d& x, const Eigen::Vector3d& mu, double kappa);

struct VmfComponent {
  double weight = 0.0;
  Eigen::Vector3d mean = Eigen::Vector3d::UnitZ();
  double kappa = 0.0;
};

struct VmfMixture {
  std::vector<VmfComponent> components;
  bool kappa_capped = false;  // some cluster was a point mass

  double density(const Eigen::Vector3d& x) const;
  const VmfComponent& dominant() const;
};

/// Moment-matched concentration from the mean resultant length:
/// kappa = r (3 - r^2) / (1 - r^2), capped at kMaxKappa. Sets *capped when
/// the cap applies.
double kappa_from_resultant(double rbar, bool* capped = nullptr);

/// sum_k pi_k mu_k normalized. Throws UndefinedDirection when the resultant
/// norm is at most 1e-9.
Eigen::Vector3d mean_direction(const VmfMixture& mixture);

struct NllResult {
  double loss = 0.0;     // mean over evaluated pixels
  std::size_t pixels = 0;
  std::size_t floored = 0;  // pixels whose density was floored at 1e-300
};

/// Mean of -log(sum_k pi_k f(n_t; mu_k, kappa_k)) over pixels with a
/// nonempty mixture and a set `valid` flag.
NllResult vmf_nll(std::span<const VmfMixture> mixtures, std::span<const Eigen::Vector3d> targets,
                  std::span<const std::uint8_t> valid);

}  // namespace rmrecon
