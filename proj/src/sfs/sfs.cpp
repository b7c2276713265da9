#include "rmrecon/sfs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rmrecon/error.hpp"
#include "rmrecon/fisheye.hpp"

namespace rmrecon {
namespace {

constexpr double kGolden = 0.6180339887498949;

double log_floor(double v) { return std::log(std::max(v, kDefaultLogFloor)); }

}  // namespace

std::vector<Eigen::Vector3d> make_candidates(int k) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "candidate grid must be >= 1");
  std::vector<Eigen::Vector3d> out;
  for (int row = 0; row < k; ++row) {
    for (int col = 0; col < k; ++col) {
      if (fisheye_pixel_valid(col, row, k)) out.push_back(fisheye_unproject(fisheye_pixel_center(col, row, k)));
    }
  }
  return out;
}

void softmax_neg_distance(std::span<const double> distances, double beta, std::span<double> out) {
  if (!(beta > 0.0)) throw Error(ErrorKind::InvalidArgument, "softmax temperature must be positive");
  const double dmin = *std::min_element(distances.begin(), distances.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    out[i] = std::exp(-beta * (distances[i] - dmin));
    sum += out[i];
  }
  for (std::size_t i = 0; i < distances.size(); ++i) out[i] /= sum;
}

LikelihoodMap observation_likelihood(const ImageF& image, std::span<const std::uint8_t> coverage,
                                     const ReflectanceMap& rm, std::span<const Eigen::Vector3d> candidates,
                                     double beta) {
  if (image.channels != 3 || coverage.size() != image.pixel_count()) {
    throw Error(ErrorKind::InvalidArgument, "observation_likelihood: need a 3-channel image and matching coverage");
  }
  if (candidates.empty()) throw Error(ErrorKind::InvalidArgument, "no candidate normals");
  const std::size_t nc = candidates.size();
  std::vector<Eigen::Vector3d> cand_log(nc);
  for (std::size_t j = 0; j < nc; ++j) {
    const Eigen::Vector3d r = rm.lookup(candidates[j]);
    cand_log[j] = {log_floor(r.x()), log_floor(r.y()), log_floor(r.z())};
  }
  LikelihoodMap out;
  out.width = image.width;
  out.height = image.height;
  out.candidates = int(nc);
  out.coverage.assign(coverage.begin(), coverage.end());
  out.probs.assign(image.pixel_count() * nc, 0.0);
#pragma omp parallel
  {
    std::vector<double> dist(nc);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(image.pixel_count()); ++i) {
      if (!coverage[std::size_t(i)]) continue;
      const float* px = &image.data[3 * std::size_t(i)];
      const Eigen::Vector3d li(log_floor(px[0]), log_floor(px[1]), log_floor(px[2]));
      for (std::size_t j = 0; j < nc; ++j) dist[j] = (li - cand_log[j]).norm();
      softmax_neg_distance(dist, beta, std::span<double>(out.probs.data() + std::size_t(i) * nc, nc));
    }
  }
  return out;
}

VmfMixture fit_vmf_pixel(std::span<const double> probs, std::span<const Eigen::Vector3d> candidates, int kv) {
  if (kv < 1) throw Error(ErrorKind::InvalidArgument, "mixture needs at least one component");
  const std::size_t nc = candidates.size();
  if (probs.size() != nc || nc == 0) throw Error(ErrorKind::InvalidArgument, "likelihood/candidate size mismatch");
  const std::size_t k = std::min<std::size_t>(std::size_t(kv), nc);

  std::vector<Eigen::Vector3d> centers;
  centers.push_back(candidates[std::size_t(std::max_element(probs.begin(), probs.end()) - probs.begin())]);
  while (centers.size() < k) {
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < nc; ++j) {
      double maxcos = -1.0;
      for (const auto& c : centers) maxcos = std::max(maxcos, c.dot(candidates[j]));
      const double score = probs[j] * (1.0 - maxcos);
      if (score > best) {
        best = score;
        arg = j;
      }
    }
    centers.push_back(candidates[arg]);
  }

  std::vector<std::size_t> assign(nc, 0);
  for (int iter = 0; iter < 20; ++iter) {
    bool changed = false;
    for (std::size_t j = 0; j < nc; ++j) {
      std::size_t a = 0;
      for (std::size_t c = 1; c < k; ++c) {
        if (centers[c].dot(candidates[j]) > centers[a].dot(candidates[j])) a = c;
      }
      if (iter == 0 || a != assign[j]) changed = true;
      assign[j] = a;
    }
    if (!changed) break;
    for (std::size_t c = 0; c < k; ++c) {
      Eigen::Vector3d r = Eigen::Vector3d::Zero();
      for (std::size_t j = 0; j < nc; ++j) {
        if (assign[j] == c) r += probs[j] * candidates[j];
      }
      if (r.norm() > 1e-12) centers[c] = r.normalized();
    }
  }

  VmfMixture mix;
  double total = 0.0;
  for (double p : probs) total += p;
  for (std::size_t c = 0; c < k; ++c) {
    Eigen::Vector3d r = Eigen::Vector3d::Zero();
    double mass = 0.0;
    for (std::size_t j = 0; j < nc; ++j) {
      if (assign[j] != c) continue;
      r += probs[j] * candidates[j];
      mass += probs[j];
    }
    VmfComponent comp;
    comp.weight = total > 0.0 ? mass / total : 0.0;
    if (mass > 0.0 && r.norm() > 0.0) {
      comp.mean = r.normalized();
      bool capped = false;
      comp.kappa = kappa_from_resultant(r.norm() / mass, &capped);
      mix.kappa_capped = mix.kappa_capped || capped;
    } else {
      comp.mean = centers[c];
      comp.kappa = 0.0;
    }
    mix.components.push_back(comp);
  }
  return mix;
}

VmfMixtureMap fit_vmf_mixture(const LikelihoodMap& likelihood, std::span<const Eigen::Vector3d> candidates, int kv) {
  VmfMixtureMap out;
  out.width = likelihood.width;
  out.height = likelihood.height;
  const std::size_t n = std::size_t(likelihood.width) * std::size_t(likelihood.height);
  out.pixels.resize(n);
  std::size_t capped = 0;
#pragma omp parallel for schedule(static) reduction(+ : capped)
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
    if (!likelihood.coverage[std::size_t(i)]) continue;
    out.pixels[std::size_t(i)] = fit_vmf_pixel(likelihood.at(std::size_t(i)), candidates, kv);
    capped += out.pixels[std::size_t(i)].kappa_capped;
  }
  out.capped = capped;
  return out;
}

Eigen::Vector3d pq_to_normal(double p, double q) {
  return Eigen::Vector3d(p, q, 1.0) / std::sqrt(p * p + q * q + 1.0);
}

Eigen::Vector2d normal_to_pq(const Eigen::Vector3d& n) {
  if (!(n.z() > 0.0)) throw Error(ErrorKind::Domain, "normal_to_pq needs n_z > 0");
  return {n.x() / n.z(), n.y() / n.z()};
}

double photometric_objective(const float* pixel, const ReflectanceMap& rm, const Eigen::Vector3d& n) {
  const Eigen::Vector3d r = rm.lookup(n);
  double obj = 0.0;
  for (int c = 0; c < 3; ++c) obj += std::abs(log_floor(pixel[c]) - log_floor(r[c]));
  return obj;
}

std::vector<Eigen::Vector3d> refine_normals(std::span<const Eigen::Vector3d> coarse, std::span<const std::uint8_t> valid,
                                            const ImageF& image, const ReflectanceMap& rm, int iterations) {
  if (coarse.size() != image.pixel_count() || valid.size() != image.pixel_count() || image.channels != 3) {
    throw Error(ErrorKind::InvalidArgument, "refine_normals: buffer sizes differ");
  }
  std::vector<Eigen::Vector3d> out(coarse.begin(), coarse.end());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(coarse.size()); ++i) {
    if (!valid[std::size_t(i)] || !(coarse[std::size_t(i)].z() > 0.0)) continue;
    const float* px = &image.data[3 * std::size_t(i)];
    Eigen::Vector2d pq = normal_to_pq(coarse[std::size_t(i)]);
    double best = photometric_objective(px, rm, coarse[std::size_t(i)]);
    double step = 0.3;
    for (int it = 0; it < iterations; ++it, step *= 0.5) {
      for (int axis = 0; axis < 2; ++axis) {
        const double span = step * (1.0 + pq.squaredNorm());
        auto f = [&](double x) {
          Eigen::Vector2d t = pq;
          t[axis] = x;
          return photometric_objective(px, rm, pq_to_normal(t.x(), t.y()));
        };
        double a = pq[axis] - span, b = pq[axis] + span;
        double x1 = b - kGolden * (b - a), x2 = a + kGolden * (b - a);
        double f1 = f(x1), f2 = f(x2);
        for (int k = 0; k < 24; ++k) {
          if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kGolden * (b - a);
            f1 = f(x1);
          } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kGolden * (b - a);
            f2 = f(x2);
          }
        }
        const double x = f1 <= f2 ? x1 : x2;
        const double fx = std::min(f1, f2);
        if (fx < best) {
          best = fx;
          pq[axis] = x;
        }
      }
    }
    out[std::size_t(i)] = pq_to_normal(pq.x(), pq.y());
  }
  return out;
}

SfsResult estimate_normals(const ImageF& image, std::span<const std::uint8_t> coverage, const ReflectanceMap& rm,
                           const SfsParams& params) {
  const std::vector<Eigen::Vector3d> candidates = make_candidates(params.candidate_grid);
  const LikelihoodMap lik = observation_likelihood(image, coverage, rm, candidates, params.beta);
  SfsResult out;
  out.mixtures = fit_vmf_mixture(lik, candidates, params.components);
  const std::size_t n = image.pixel_count();
  std::vector<Eigen::Vector3d> coarse(n, Eigen::Vector3d::UnitZ());
  out.valid.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!coverage[i]) continue;
    const VmfMixture& mix = out.mixtures.pixels[i];
    try {
      coarse[i] = mean_direction(mix);
    } catch (const Error&) {
      coarse[i] = mix.dominant().mean;
      ++out.fallbacks;
    }
    out.valid[i] = coarse[i].z() > 0.0;
  }
  out.normals = refine_normals(coarse, out.valid, image, rm, params.refine_iterations);
  for (std::size_t i = 0; i < n; ++i) {
    if (out.valid[i] && !(out.normals[i].allFinite() && out.normals[i].z() > 0.0)) out.valid[i] = 0;
  }
  return out;
}

}  // namespace rmrecon
