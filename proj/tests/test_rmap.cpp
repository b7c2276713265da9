#include <doctest.h>

#include <algorithm>
#include <random>

#include "rmrecon/envmap.hpp"
#include "rmrecon/error.hpp"
#include "rmrecon/fisheye.hpp"
#include "rmrecon/reference.hpp"
#include "rmrecon/reflectance_map.hpp"
#include "rmrecon/rm_estimation.hpp"
#include "rmrecon/weighted_map.hpp"
#include "test_support.hpp"

using namespace rmrecon;

namespace {

// Direct evaluation of the normalized kernel average with the hole pass.
std::vector<double> brute_force_map(const ImageF& f, const std::vector<Eigen::Vector3d>& normals,
                                    const std::vector<std::uint8_t>& coverage, const ConfidenceMap& conf,
                                    const Eigen::Vector3d& omega, const MapKernelParams& p, int res) {
  double cmax = 0.0;
  for (std::size_t i = 0; i < coverage.size(); ++i) {
    if (coverage[i]) cmax = std::max(cmax, conf.weights[i]);
  }
  std::vector<double> out(std::size_t(res * res * f.channels), 0.0);
  for (int row = 0; row < res; ++row) {
    for (int col = 0; col < res; ++col) {
      const Eigen::Vector2d uv((col + 0.5) / res, (row + 0.5) / res);
      if (std::hypot(2 * uv.x() - 1, 2 * uv.y() - 1) >= 1.0) continue;
      const Eigen::Vector3d q = fisheye_unproject(uv);
      for (double s : {p.s, p.s_fill}) {
        double den = 0.0;
        std::vector<double> num(std::size_t(f.channels), 0.0);
        for (std::size_t m = 0; m < coverage.size(); ++m) {
          if (!coverage[m]) continue;
          const double w = conf.weights[m] / cmax * std::max(normals[m].dot(omega), 0.0) *
                           std::exp(s * (normals[m].dot(q) - 1.0));
          den += w;
          for (int c = 0; c < f.channels; ++c) num[std::size_t(c)] += w * f.data[m * std::size_t(f.channels) + std::size_t(c)];
        }
        if (s == p.s && den < p.eps_den) continue;
        for (int c = 0; c < f.channels; ++c) {
          out[(std::size_t(row) * std::size_t(res) + std::size_t(col)) * std::size_t(f.channels) + std::size_t(c)] =
              num[std::size_t(c)] / den;
        }
        break;
      }
    }
  }
  return out;
}

struct RandomInstance {
  ImageF features;
  std::vector<Eigen::Vector3d> normals;
  std::vector<std::uint8_t> coverage;
  ConfidenceMap confidence;
};

RandomInstance random_instance(std::mt19937_64& rng, int size = 16, int channels = 3) {
  RandomInstance r;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  r.features = ImageF(size, size, channels);
  for (float& v : r.features.data) v = float(5.0 * u(rng));
  r.normals.resize(std::size_t(size * size));
  r.coverage.resize(r.normals.size());
  r.confidence = ConfidenceMap(size, size);
  for (std::size_t i = 0; i < r.normals.size(); ++i) {
    r.normals[i] = testing::random_hemisphere(rng);
    r.coverage[i] = u(rng) < 0.8;
    r.confidence.weights[i] = 0.05 + 0.95 * u(rng);
  }
  r.coverage[0] = 1;
  r.normals[0] = Eigen::Vector3d(0, 0, 1);
  return r;
}

}  // namespace

TEST_SUITE("rmap") {
  TEST_CASE("fisheye projection examples and round trip") {
    CHECK((fisheye_project(Eigen::Vector3d(0, 0, 1)) - Eigen::Vector2d(0.5, 0.5)).norm() == 0.0);
    CHECK((fisheye_project(Eigen::Vector3d(1, 0, 1e-12).normalized()) - Eigen::Vector2d(1.0, 0.5)).norm() < 1e-9);
    std::mt19937_64 rng(1);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const Eigen::Vector3d n = testing::random_hemisphere(rng);
      worst = std::max(worst, (fisheye_unproject(fisheye_project(n)) - n).norm());
    }
    CHECK(worst < 1e-12);
    CHECK_THROWS_AS(fisheye_project(Eigen::Vector3d(1, 0, 0)), Error);
    try {
      fisheye_unproject({0.99, 0.99});
      FAIL("expected invalid pixel");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidPixel);
    }
    const ReflectanceMap rm(32, Eigen::Matrix3d::Identity());
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) {
        const double r = std::hypot((x + 0.5) / 16.0 - 1.0, (y + 0.5) / 16.0 - 1.0);
        CHECK(rm.valid(x, y) == (r < 1.0));
      }
    }
  }

  TEST_CASE("constant light on a Lambertian surface gives a constant map") {
    const Eigen::Vector3d c(1.5, 0.7, 2.0), albedo(0.8, 0.5, 0.3);
    const ReflectanceMap rm = rm_from_scene(EnvMap::constant(c), Lambertian{albedo}, Eigen::Vector3d(0, 0, 1),
                                            Eigen::Matrix3d::Identity(), 32);
    double worst = 0.0;
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) {
        if (!rm.valid(x, y)) continue;
        const Eigen::Vector3d v = rm.pixel(x, y);
        for (int ch = 0; ch < 3; ++ch) worst = std::max(worst, std::abs(v[ch] / (c[ch] * albedo[ch]) - 1.0));
      }
    }
    CHECK(worst < 1e-6);
  }

  TEST_CASE("quadrature self-convergence on a smooth environment") {
    const EnvMap env = testing::three_lobe_envmap();
    const Eigen::Matrix3d R = testing::orbit_camera(0.2, 0.3, 4.0, 32, 40.0).view_rotation();
    const Eigen::Vector3d w = R.transpose() * Eigen::Vector3d::UnitZ();
    const ReflectanceMap a = rm_from_scene(env, Lambertian{}, w, R, 24, 1 << 16);
    const ReflectanceMap b = rm_from_scene(env, Lambertian{}, w, R, 24, 1 << 17);
    double worst = 0.0;
    for (int y = 0; y < 24; ++y) {
      for (int x = 0; x < 24; ++x) {
        if (!a.valid(x, y)) continue;
        for (int ch = 0; ch < 3; ++ch) worst = std::max(worst, std::abs(a.data().at(x, y, ch) / b.data().at(x, y, ch) - 1.0));
      }
    }
    CHECK(worst < 1e-3);
  }

  TEST_CASE("a single bright lobe peaks the map at the lobe direction") {
    const Eigen::Vector3d lobe_view = Eigen::Vector3d(0.3, -0.4, 0.8).normalized();
    const Eigen::Matrix3d R = testing::orbit_camera(1.0, 0.2, 4.0, 32, 40.0).view_rotation();
    const EnvMap env = make_lobe_envmap(Eigen::Vector3d::Zero(), {{R.transpose() * lobe_view, Eigen::Vector3d::Constant(10.0), 200.0}},
                                        512, 256);
    const ReflectanceMap rm = rm_from_scene(env, Lambertian{}, R.transpose() * Eigen::Vector3d::UnitZ(), R, 64);
    int bx = 0, by = 0;
    double best = -1.0;
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        if (rm.valid(x, y) && rm.data().at(x, y, 0) > best) {
          best = rm.data().at(x, y, 0);
          bx = x;
          by = y;
        }
      }
    }
    const Eigen::Vector3d peak = fisheye_unproject(fisheye_pixel_center(bx, by, 64));
    // Within two fisheye pixels (2 * 90 / 32 degrees).
    CHECK(testing::angle_deg(peak, lobe_view) < 2.0 * 90.0 / 32.0);
  }

  TEST_CASE("parallel quadrature matches the serial reference") {
    const EnvMap env = testing::three_lobe_envmap();
    const Eigen::Matrix3d R = testing::orbit_camera(2.0, -0.3, 4.0, 32, 40.0).view_rotation();
    const Eigen::Vector3d w = R.transpose() * Eigen::Vector3d::UnitZ();
    for (const Brdf& brdf : {Brdf(Lambertian{}), Brdf(BlinnPhong{})}) {
      const ReflectanceMap a = rm_from_scene(env, brdf, w, R, 16, 4096);
      const ReflectanceMap b = reference::rm_from_scene(env, brdf, w, R, 16, 4096);
      double worst = 0.0;
      for (std::size_t i = 0; i < a.data().data.size(); ++i) {
        worst = std::max(worst, std::abs(double(a.data().data[i]) - double(b.data().data[i])) /
                                    std::max(1e-30, double(b.data().data[i])));
      }
      CHECK(worst < 1e-6);
    }
  }

  TEST_CASE("weighted_map small examples") {
    const MapKernelParams p;
    ImageF one(1, 1, 3);
    one.data = {2.0f, 3.0f, 4.0f};
    const std::vector<Eigen::Vector3d> up{Eigen::Vector3d(0, 0, 1)};
    const std::vector<std::uint8_t> cov{1};
    MappedFeatures m = weighted_map(one, up, cov, ConfidenceMap(1, 1), Eigen::Vector3d(0, 0, 1), p, 5);
    CHECK(m.value(2, 2, 0) == 2.0);
    CHECK(m.value(2, 2, 1) == 3.0);
    CHECK(m.value(2, 2, 2) == 4.0);

    ImageF two(2, 1, 1);
    two.data = {1.0f, 4.0f};
    const std::vector<Eigen::Vector3d> ups(2, Eigen::Vector3d(0, 0, 1));
    m = weighted_map(two, ups, std::vector<std::uint8_t>{1, 1}, ConfidenceMap(2, 1), Eigen::Vector3d(0, 0, 1), p, 5);
    CHECK(m.value(2, 2, 0) == doctest::Approx(2.5).epsilon(1e-15));

    try {
      weighted_map(two, ups, std::vector<std::uint8_t>{0, 0}, ConfidenceMap(2, 1), Eigen::Vector3d(0, 0, 1), p, 5);
      FAIL("expected empty observation");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::EmptyObservation);
    }
  }

  TEST_CASE("weighted_map matches a direct double loop") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
      const RandomInstance r = random_instance(rng);
      const Eigen::Vector3d omega = testing::random_hemisphere(rng);
      MapKernelParams p;
      p.s = 20.0 + 30.0 * trial;
      const MappedFeatures m = weighted_map(r.features, r.normals, r.coverage, r.confidence, omega, p, 12);
      const auto oracle = brute_force_map(r.features, r.normals, r.coverage, r.confidence, omega, p, 12);
      for (std::size_t i = 0; i < oracle.size(); ++i) {
        REQUIRE(std::abs(m.values[i] - oracle[i]) <= 1e-12 * std::max(1.0, std::abs(oracle[i])));
      }
    }
  }

  TEST_CASE("weighted_map output is a convex combination, invariant to confidence scale") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
      RandomInstance r = random_instance(rng);
      const Eigen::Vector3d omega(0, 0, 1);
      const MapKernelParams p;
      const MappedFeatures m = weighted_map(r.features, r.normals, r.coverage, r.confidence, omega, p, 16);
      for (int c = 0; c < 3; ++c) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t i = 0; i < r.coverage.size(); ++i) {
          if (!r.coverage[i]) continue;
          lo = std::min(lo, double(r.features.data[3 * i + std::size_t(c)]));
          hi = std::max(hi, double(r.features.data[3 * i + std::size_t(c)]));
        }
        for (int y = 0; y < 16; ++y) {
          for (int x = 0; x < 16; ++x) {
            if (!fisheye_pixel_valid(x, y, 16)) continue;
            CHECK(m.value(x, y, c) >= lo - 1e-12);
            CHECK(m.value(x, y, c) <= hi + 1e-12);
          }
        }
      }
      ConfidenceMap scaled = r.confidence;
      for (double& w : scaled.weights) w *= 0.125;
      const MappedFeatures ms = weighted_map(r.features, r.normals, r.coverage, scaled, omega, p, 16);
      for (std::size_t i = 0; i < m.values.size(); ++i) CHECK(ms.values[i] == doctest::Approx(m.values[i]).epsilon(1e-13));
    }
  }

  TEST_CASE("parallel weighted_map matches the serial reference") {
    std::mt19937_64 rng(4);
    const RandomInstance r = random_instance(rng, 24);
    const MapKernelParams p;
    const MappedFeatures a = weighted_map(r.features, r.normals, r.coverage, r.confidence, Eigen::Vector3d(0, 0, 1), p, 20);
    const MappedFeatures b =
        reference::weighted_map(r.features, r.normals, r.coverage, r.confidence, Eigen::Vector3d(0, 0, 1), p, 20);
    CHECK(a.filled == b.filled);
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-12));
  }

  TEST_CASE("render_from_rm lookups") {
    ReflectanceMap rm(16, Eigen::Matrix3d::Identity());
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        if (rm.valid(x, y)) rm.set_pixel(x, y, Eigen::Vector3d(0.5, 1.0, 2.0));
      }
    }
    std::mt19937_64 rng(5);
    std::vector<Eigen::Vector3d> normals(64);
    std::vector<std::uint8_t> cov(64, 1);
    for (auto& n : normals) n = testing::random_hemisphere(rng);
    cov[5] = 0;
    const RenderedImage img = render_from_rm(rm, normals, cov, 8, 8);
    for (std::size_t i = 0; i < 64; ++i) {
      CHECK(img.image.data[3 * i] == (i == 5 ? 0.0f : 0.5f));
      CHECK(img.image.data[3 * i + 2] == (i == 5 ? 0.0f : 2.0f));
    }
    CHECK(img.out_of_hemisphere == 0);

    ReflectanceMap varied(16, Eigen::Matrix3d::Identity());
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        if (varied.valid(x, y)) varied.set_pixel(x, y, Eigen::Vector3d(x + 1.0, y + 1.0, x * y + 1.0));
      }
    }
    const Eigen::Vector3d at_center = fisheye_unproject(fisheye_pixel_center(5, 9, 16));
    CHECK((varied.lookup(at_center) - varied.pixel(5, 9)).norm() < 1e-9);

    std::vector<Eigen::Vector3d> back{Eigen::Vector3d(0, 0, -1)};
    const RenderedImage dark = render_from_rm(varied, back, std::vector<std::uint8_t>{1}, 1, 1);
    CHECK(dark.out_of_hemisphere == 1);
    CHECK(dark.image.data[0] == 0.0f);
  }

  TEST_CASE("confidence update") {
    ImageF a(2, 1, 3, 1.0f), b(2, 1, 3, 1.0f);
    ConfidenceMap w = confidence_update(a, b);
    CHECK(w.weights[0] == 1.0);
    b.at(1, 0, 0) = float(std::exp(0.05));
    b.at(1, 0, 2) = float(std::exp(-0.05));
    w = confidence_update(a, b, 10.0);
    CHECK(w.weights[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
    double prev = 1.0;
    for (double gap : {0.01, 0.1, 0.5, 2.0, 50.0}) {
      b.at(1, 0, 1) = float(std::exp(gap));
      b.at(1, 0, 0) = 1.0f;
      b.at(1, 0, 2) = 1.0f;
      w = confidence_update(a, b, 10.0);
      CHECK(w.weights[1] < prev);
      CHECK(w.weights[1] > 0.0);
      prev = w.weights[1];
    }
  }

  TEST_CASE("rm_losses examples") {
    const testing::SphereView v = testing::sphere_view(0.3, 0.35, 32, 32);
    RmLosses l = rm_losses(v.rm, v.rm, RmObservation{&v.image, v.gbuffer.normal, v.gbuffer.coverage});
    CHECK(l.log_l1 == 0.0);
    CHECK(l.log_gradient == 0.0);
    CHECK(l.image_recon == doctest::Approx(0.0).epsilon(1e-6));
    ReflectanceMap scaled = v.rm;
    for (float& x : scaled.data().data) x *= float(std::exp(1.0));
    l = rm_losses(scaled, v.rm);
    CHECK(l.log_l1 == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(l.log_gradient == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
  }

  TEST_CASE("reflectance map file round trip") {
    const auto dir = testing::scratch_dir("rmap");
    const testing::SphereView v = testing::sphere_view(0.3, 0.35, 16, 24);
    save_reflectance_map(v.rm, dir / "rm.pfm");
    const ReflectanceMap back = load_reflectance_map(dir / "rm.pfm");
    CHECK(back.data().data == v.rm.data().data);
    CHECK((back.view_rotation() - v.rm.view_rotation()).norm() < 1e-15);
  }

  TEST_CASE("estimate_rm recovers a known map from exact normals") {
    const testing::SphereView v = testing::sphere_view();
    const RmEstimate a = estimate_rm(v.image, v.gbuffer.normal, v.gbuffer.coverage, v.omega_o, v.gbuffer.view_rotation);
    const auto observed = testing::observed_rm_pixels(v.gbuffer, 128);
    const double err = testing::log_mae(a.rm, v.rm, observed);
    MESSAGE("observed-pixel log-MAE " << err << ", full disc " << testing::log_mae(a.rm, v.rm));
    CHECK(err < 0.05);
    for (double w : a.confidence.weights) {
      CHECK(w > 0.0);
      CHECK(w <= 1.0);
    }
    const RmEstimate b = estimate_rm(v.image, v.gbuffer.normal, v.gbuffer.coverage, v.omega_o, v.gbuffer.view_rotation);
    CHECK(a.rm.data().data == b.rm.data().data);
    CHECK(a.confidence.weights == b.confidence.weights);
  }

  TEST_CASE("estimate_rm suppresses corrupted pixels") {
    const testing::SphereView v = testing::sphere_view();
    std::vector<std::size_t> covered;
    for (std::size_t i = 0; i < v.gbuffer.pixel_count(); ++i) {
      if (v.gbuffer.coverage[i]) covered.push_back(i);
    }
    std::mt19937_64 rng(11);
    std::shuffle(covered.begin(), covered.end(), rng);
    const std::size_t n_bad = covered.size() / 10;
    ImageF corrupted = v.image;
    std::vector<std::uint8_t> bad(v.gbuffer.pixel_count(), 0);
    for (std::size_t k = 0; k < n_bad; ++k) {
      bad[covered[k]] = 1;
      for (int c = 0; c < 3; ++c) corrupted.data[3 * covered[k] + std::size_t(c)] *= 10.0f;
    }
    const RmEstimate clean = estimate_rm(v.image, v.gbuffer.normal, v.gbuffer.coverage, v.omega_o, v.gbuffer.view_rotation);
    const RmEstimate dirty = estimate_rm(corrupted, v.gbuffer.normal, v.gbuffer.coverage, v.omega_o, v.gbuffer.view_rotation);
    std::vector<double> good_conf;
    double bad_sum = 0.0, bad_max = 0.0;
    for (std::size_t i = 0; i < bad.size(); ++i) {
      if (!v.gbuffer.coverage[i]) continue;
      const double w = dirty.confidence.weights[i];
      if (bad[i]) {
        bad_sum += w;
        bad_max = std::max(bad_max, w);
      } else {
        good_conf.push_back(w);
      }
    }
    std::nth_element(good_conf.begin(), good_conf.begin() + std::ptrdiff_t(good_conf.size() / 2), good_conf.end());
    const double median = good_conf[good_conf.size() / 2];
    const double e_clean = testing::log_mae(clean.rm, v.rm), e_dirty = testing::log_mae(dirty.rm, v.rm);
    MESSAGE("corrupted confidence mean " << bad_sum / double(n_bad) << " max " << bad_max << ", clean median " << median
                                         << "; log-MAE clean " << e_clean << " corrupted " << e_dirty);
    CHECK(bad_max < 0.5 * median);
    CHECK(e_dirty < 2.0 * e_clean);
  }
}
