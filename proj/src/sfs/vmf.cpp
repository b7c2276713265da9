#include "rmrecon/vmf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rmrecon/error.hpp"

namespace rmrecon {

double vmf_log_normalizer(double kappa) {
  if (!(kappa >= 0.0)) throw Error(ErrorKind::InvalidArgument, "vMF concentration must be >= 0");
  if (kappa < 1e-8) {
    // kappa / sinh(kappa) = 1 - kappa^2 / 6 + ...
    return -std::log(4.0 * std::numbers::pi) - kappa * kappa / 6.0;
  }
  return std::log(kappa / (2.0 * std::numbers::pi)) - kappa - std::log1p(-std::exp(-2.0 * kappa));
}

double vmf_log_pdf(const Eigen::Vector3d& x, const Eigen::Vector3d& mu, double kappa) {
  return vmf_log_normalizer(kappa) + kappa * mu.dot(x);
}

double vmf_pdf(const Eigen::Vector3d& x, const Eigen::Vector3d& mu, double kappa) {
  return std::exp(vmf_log_pdf(x, mu, kappa));
}

double VmfMixture::density(const Eigen::Vector3d& x) const {
  double d = 0.0;
  for (const auto& c : components) {
    if (c.weight > 0.0) d += c.weight * vmf_pdf(x, c.mean, c.kappa);
  }
  return d;
}

const VmfComponent& VmfMixture::dominant() const {
  if (components.empty()) throw Error(ErrorKind::InvalidArgument, "empty vMF mixture");
  std::size_t best = 0;
  for (std::size_t k = 1; k < components.size(); ++k) {
    if (components[k].weight > components[best].weight) best = k;
  }
  return components[best];
}

double kappa_from_resultant(double rbar, bool* capped) {
  rbar = std::clamp(rbar, 0.0, 1.0);
  const double denom = 1.0 - rbar * rbar;
  double kappa = denom > 0.0 ? rbar * (3.0 - rbar * rbar) / denom : kMaxKappa;
  const bool cap = !(kappa < kMaxKappa);
  if (cap) kappa = kMaxKappa;
  if (capped) *capped = cap;
  return kappa;
}

Eigen::Vector3d mean_direction(const VmfMixture& mixture) {
  Eigen::Vector3d r = Eigen::Vector3d::Zero();
  for (const auto& c : mixture.components) r += c.weight * c.mean;
  const double len = r.norm();
  if (!(len > 1e-9)) throw Error(ErrorKind::UndefinedDirection, "vMF mixture components cancel");
  return r / len;
}

NllResult vmf_nll(std::span<const VmfMixture> mixtures, std::span<const Eigen::Vector3d> targets,
                  std::span<const std::uint8_t> valid) {
  if (targets.size() != mixtures.size() || valid.size() != mixtures.size()) {
    throw Error(ErrorKind::InvalidArgument, "vmf_nll: buffer sizes differ");
  }
  NllResult out;
  double sum = 0.0;
  for (std::size_t i = 0; i < mixtures.size(); ++i) {
    if (!valid[i] || mixtures[i].components.empty()) continue;
    double d = mixtures[i].density(targets[i]);
    if (!(d >= 1e-300)) {
      d = 1e-300;
      ++out.floored;
    }
    sum -= std::log(d);
    ++out.pixels;
  }
  if (out.pixels) out.loss = sum / double(out.pixels);
  return out;
}

}  // namespace rmrecon
