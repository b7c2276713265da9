#include <doctest.h>

#include "rmrecon/error.hpp"
#include "rmrecon/sfs.hpp"
#include "rmrecon/vmf.hpp"
#include "test_support.hpp"

using namespace rmrecon;

namespace {

// Covered pixels whose 5x5 neighbourhood is fully covered.
std::vector<std::uint8_t> interior_pixels(const GBuffer& g) {
  std::vector<std::uint8_t> out(g.pixel_count(), 0);
  for (int y = 2; y < g.height - 2; ++y) {
    for (int x = 2; x < g.width - 2; ++x) {
      bool all = true;
      for (int dy = -2; dy <= 2 && all; ++dy) {
        for (int dx = -2; dx <= 2 && all; ++dx) all = g.coverage[std::size_t((y + dy) * g.width + x + dx)] != 0;
      }
      out[std::size_t(y * g.width + x)] = all;
    }
  }
  return out;
}

double direct_mixture_density(const VmfMixture& m, const Eigen::Vector3d& x) {
  double d = 0.0;
  for (const auto& c : m.components) {
    const double norm = c.kappa == 0.0 ? 1.0 / (4.0 * M_PI) : c.kappa / (4.0 * M_PI * std::sinh(c.kappa));
    d += c.weight * norm * std::exp(c.kappa * c.mean.dot(x));
  }
  return d;
}

VmfMixture random_mixture(std::mt19937_64& rng, int k) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VmfMixture m;
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    VmfComponent c;
    c.weight = 0.1 + u(rng);
    c.mean = testing::random_unit(rng);
    c.kappa = 0.2 + 50.0 * u(rng);
    total += c.weight;
    m.components.push_back(c);
  }
  for (auto& c : m.components) c.weight /= total;
  return m;
}

}  // namespace

TEST_SUITE("sfs") {
  TEST_CASE("candidate design") {
    const auto c = make_candidates(8);
    CHECK(c.size() <= 64);
    CHECK(c.size() > 40);
    for (const auto& n : c) {
      CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(n.z() > 0.0);
    }
  }

  TEST_CASE("softmax over negative distances") {
    std::vector<double> out(2);
    softmax_neg_distance(std::vector<double>{0.7, 0.7}, 20.0, out);
    CHECK(out[0] == doctest::Approx(0.5));
    CHECK(out[1] == doctest::Approx(0.5));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    std::vector<double> d(50), a(50), b(50);
    for (double& x : d) x = u(rng);
    softmax_neg_distance(d, 20.0, a);
    for (double& x : d) x += 123.0;
    softmax_neg_distance(d, 20.0, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      sum += a[i];
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }

  TEST_CASE("likelihood argmax is the nearest candidate under an isotropic reflectance map") {
    const testing::SphereView v =
        testing::sphere_view(0.3, 0.35, 128, 128, Lambertian{}, testing::isotropic_envmap());
    const auto cand = make_candidates(8);
    const LikelihoodMap lik = observation_likelihood(v.image, v.gbuffer.coverage, v.rm, cand);
    const auto interior = interior_pixels(v.gbuffer);
    std::size_t hits = 0, total = 0;
    for (std::size_t i = 0; i < v.gbuffer.pixel_count(); ++i) {
      if (!v.gbuffer.coverage[i]) continue;
      const auto row = lik.at(i);
      double sum = 0.0;
      for (double p : row) {
        REQUIRE(p >= 0.0);
        sum += p;
      }
      REQUIRE(std::abs(sum - 1.0) < 1e-9);
      if (!interior[i]) continue;
      const auto arg = std::max_element(row.begin(), row.end()) - row.begin();
      std::size_t nearest = 0;
      for (std::size_t c = 1; c < cand.size(); ++c) {
        if (cand[c].dot(v.gbuffer.normal[i]) > cand[nearest].dot(v.gbuffer.normal[i])) nearest = c;
      }
      hits += std::size_t(arg) == nearest;
      ++total;
    }
    MESSAGE("argmax == nearest candidate on " << hits << " of " << total << " interior pixels");
    CHECK(double(hits) >= 0.95 * double(total));
  }

  TEST_CASE("vMF density closed forms") {
    const Eigen::Vector3d mu = Eigen::Vector3d(0.3, -0.2, 0.9).normalized();
    CHECK(vmf_pdf(testing::random_unit(*std::make_unique<std::mt19937_64>(2)), mu, 0.0) ==
          doctest::Approx(1.0 / (4.0 * M_PI)).epsilon(1e-15));
    CHECK(vmf_pdf(mu, mu, 1e-12) == doctest::Approx(1.0 / (4.0 * M_PI)).epsilon(1e-10));
    // e / (4 pi sinh 1), evaluated to 40 digits.
    CHECK(vmf_pdf(mu, mu, 1.0) == doctest::Approx(0.1840654996165959771872829517729).epsilon(1e-14));
    // Large concentrations stay finite in log space.
    CHECK(std::isfinite(vmf_log_pdf(mu, mu, 5000.0)));
    CHECK(vmf_log_pdf(-mu, mu, 5000.0) < -9000.0);
  }

  TEST_CASE("vMF density integrates to one") {
    const Eigen::Vector3d mu = Eigen::Vector3d(1.0, 0.5, 0.2).normalized();
    const int nt = 2000, np = 4000;
    for (double kappa : {0.1, 1.0, 10.0, 100.0}) {
      double sum = 0.0;
      for (int i = 0; i < nt; ++i) {
        const double th = (i + 0.5) * M_PI / nt;
        double ring = 0.0;
        for (int j = 0; j < np; ++j) {
          const double ph = (j + 0.5) * 2.0 * M_PI / np;
          ring += vmf_pdf(Eigen::Vector3d(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)), mu, kappa);
        }
        sum += ring * std::sin(th);
      }
      sum *= (M_PI / nt) * (2.0 * M_PI / np);
      CHECK(std::abs(sum - 1.0) < 1e-6);
    }
  }

  TEST_CASE("kappa from the resultant length") {
    CHECK(kappa_from_resultant(0.0) == 0.0);
    CHECK(kappa_from_resultant(0.5) == doctest::Approx(0.5 * 2.75 / 0.75));
    bool capped = false;
    CHECK(kappa_from_resultant(1.0, &capped) == kMaxKappa);
    CHECK(capped);
  }

  TEST_CASE("mixture fits: point mass and uniform likelihood") {
    const auto cand = make_candidates(8);
    std::vector<double> p(cand.size(), 0.0);
    p[17] = 1.0;
    VmfMixture m = fit_vmf_pixel(p, cand);
    CHECK(m.dominant().weight >= 0.99);
    CHECK((m.dominant().mean - cand[17]).norm() < 1e-12);
    CHECK(m.kappa_capped);

    std::fill(p.begin(), p.end(), 1.0 / double(cand.size()));
    m = fit_vmf_pixel(p, cand, 1);
    CHECK(m.components.size() == 1);
    CHECK(m.components[0].kappa < 3.0);
    for (const auto& c : fit_vmf_pixel(p, cand, 2).components) CHECK(c.mean.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("mean direction of unimodal fits follows the weighted resultant") {
    const auto cand = make_candidates(8);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::Vector3d peak = testing::random_hemisphere(rng);
      if (peak.z() < 0.3) continue;
      std::vector<double> p(cand.size());
      double total = 0.0;
      for (std::size_t c = 0; c < cand.size(); ++c) total += p[c] = std::exp(15.0 * (cand[c].dot(peak) - 1.0));
      Eigen::Vector3d resultant = Eigen::Vector3d::Zero();
      for (std::size_t c = 0; c < cand.size(); ++c) resultant += p[c] / total * cand[c];
      const VmfMixture m = fit_vmf_pixel(p, cand);
      CHECK(testing::angle_deg(mean_direction(m), resultant) < 2.0);
    }
  }

  TEST_CASE("mean direction formula, symmetry and cancellation") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
      const VmfMixture m = random_mixture(rng, 1 + trial % 3);
      Eigen::Vector3d s = Eigen::Vector3d::Zero();
      for (const auto& c : m.components) s += c.weight * c.mean;
      CHECK((mean_direction(m) - s / s.norm()).norm() < 1e-12);
    }
    VmfMixture sym;
    sym.components = {{0.5, Eigen::Vector3d(0.6, 0, 0.8), 5.0}, {0.5, Eigen::Vector3d(-0.6, 0, 0.8), 5.0}};
    CHECK((mean_direction(sym) - Eigen::Vector3d(0, 0, 1)).norm() < 1e-15);
    VmfMixture anti;
    anti.components = {{0.5, Eigen::Vector3d(1, 0, 0), 5.0}, {0.5, Eigen::Vector3d(-1, 0, 0), 5.0}};
    try {
      mean_direction(anti);
      FAIL("expected undefined direction");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::UndefinedDirection);
    }
  }

  TEST_CASE("pq parameterization") {
    CHECK((pq_to_normal(0, 0) - Eigen::Vector3d(0, 0, 1)).norm() == 0.0);
    CHECK((pq_to_normal(1, 0) - Eigen::Vector3d(M_SQRT1_2, 0, M_SQRT1_2)).norm() < 1e-15);
    std::mt19937_64 rng(5);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const Eigen::Vector3d n = testing::random_hemisphere(rng);
      const Eigen::Vector2d pq = normal_to_pq(n);
      worst = std::max(worst, (pq_to_normal(pq.x(), pq.y()) - n).norm());
    }
    CHECK(worst < 1e-14);
    CHECK_THROWS_AS(normal_to_pq(Eigen::Vector3d(0, 1, 0)), Error);
  }

  TEST_CASE("NLL values") {
    VmfMixture uniform;
    uniform.components = {{1.0, Eigen::Vector3d(0, 0, 1), 0.0}};
    const std::vector<VmfMixture> one{uniform};
    const std::vector<Eigen::Vector3d> target{Eigen::Vector3d(0.6, 0.0, 0.8)};
    const std::vector<std::uint8_t> valid{1};
    CHECK(vmf_nll(one, target, valid).loss == doctest::Approx(2.531024246969290792977891594).epsilon(1e-14));

    VmfMixture sharp;
    sharp.components = {{1.0, Eigen::Vector3d(0, 0, 1), 200.0}};
    const std::vector<VmfMixture> s{sharp};
    const double at_mode = vmf_nll(s, std::vector<Eigen::Vector3d>{Eigen::Vector3d(0, 0, 1)}, valid).loss;
    std::mt19937_64 rng(6);
    for (int i = 0; i < 100; ++i) {
      CHECK(at_mode < vmf_nll(s, std::vector<Eigen::Vector3d>{testing::random_unit(rng)}, valid).loss);
    }

    std::vector<VmfMixture> mixtures;
    std::vector<Eigen::Vector3d> targets;
    std::vector<std::uint8_t> flags;
    double direct = 0.0;
    std::size_t counted = 0;
    for (int i = 0; i < 200; ++i) {
      mixtures.push_back(random_mixture(rng, 1 + i % 3));
      targets.push_back(testing::random_unit(rng));
      flags.push_back(i % 5 != 0);
      if (flags.back()) {
        direct += -std::log(direct_mixture_density(mixtures.back(), targets.back()));
        ++counted;
      }
    }
    const NllResult r = vmf_nll(mixtures, targets, flags);
    CHECK(r.pixels == counted);
    CHECK(std::abs(r.loss - direct / double(counted)) <= 1e-10 * std::abs(r.loss));
  }

  TEST_CASE("refinement is monotone and sharpens the coarse estimate") {
    const testing::SphereView v = testing::sphere_view(1.1, -0.3, 96, 128);
    const auto cand = make_candidates(8);
    const LikelihoodMap lik = observation_likelihood(v.image, v.gbuffer.coverage, v.rm, cand);
    const VmfMixtureMap mix = fit_vmf_mixture(lik, cand);
    std::vector<Eigen::Vector3d> coarse(v.gbuffer.pixel_count(), Eigen::Vector3d::UnitZ());
    for (std::size_t i = 0; i < coarse.size(); ++i) {
      if (v.gbuffer.coverage[i]) coarse[i] = mix.pixels[i].dominant().mean;
    }
    std::vector<Eigen::Vector3d> prev = coarse;
    for (int it = 1; it <= 4; ++it) {
      const auto refined = refine_normals(coarse, v.gbuffer.coverage, v.image, v.rm, it);
      for (std::size_t i = 0; i < refined.size(); ++i) {
        if (!v.gbuffer.coverage[i]) continue;
        const float* px = &v.image.data[3 * i];
        REQUIRE(photometric_objective(px, v.rm, refined[i]) <= photometric_objective(px, v.rm, prev[i]));
        REQUIRE(std::abs(refined[i].norm() - 1.0) < 1e-9);
        REQUIRE(refined[i].z() > 0.0);
      }
      prev = refined;
    }
    std::vector<double> errors;
    for (std::size_t i = 0; i < prev.size(); ++i) {
      if (v.gbuffer.coverage[i]) errors.push_back(testing::angle_deg(prev[i], v.gbuffer.normal[i]));
    }
    std::nth_element(errors.begin(), errors.begin() + long(errors.size() / 2), errors.end());
    MESSAGE("median refined error " << errors[errors.size() / 2] << " deg");
    CHECK(errors[errors.size() / 2] < 13.0);

    // An optimal start stays put.
    std::vector<Eigen::Vector3d> exact = v.gbuffer.normal;
    for (std::size_t i = 0; i < exact.size(); ++i) {
      if (!v.gbuffer.coverage[i]) exact[i] = Eigen::Vector3d::UnitZ();
    }
    const auto kept = refine_normals(exact, v.gbuffer.coverage, v.image, v.rm, 4);
    double moved = 0.0;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (v.gbuffer.coverage[i] && v.gbuffer.normal[i].z() > 0.2) moved = std::max(moved, testing::angle_deg(kept[i], exact[i]));
    }
    CHECK(moved < 0.05);
  }

  TEST_CASE("normals of a rendered sphere are recovered to within five degrees") {
    const testing::SphereView v = testing::sphere_view(2.3, 0.4);
    const SfsResult r = estimate_normals(v.image, v.gbuffer.coverage, v.rm);
    const auto interior = interior_pixels(v.gbuffer);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < r.normals.size(); ++i) {
      if (!r.valid[i]) continue;
      CHECK(std::abs(r.normals[i].norm() - 1.0) < 1e-9);
      CHECK(r.normals[i].z() > 0.0);
      if (!interior[i]) continue;
      sum += testing::angle_deg(r.normals[i], v.gbuffer.normal[i]);
      ++n;
    }
    MESSAGE("mean angular error " << sum / double(n) << " deg over " << n << " interior pixels");
    CHECK(sum / double(n) < 5.0);
  }
}
