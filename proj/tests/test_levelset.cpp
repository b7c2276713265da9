#include <doctest.h>

#include "rmrecon/error.hpp"
#include "rmrecon/gbuffer.hpp"
#include "rmrecon/levelset.hpp"
#include "rmrecon/marching_cubes.hpp"
#include "test_support.hpp"

using namespace rmrecon;

namespace {

GBuffer one_pixel(const Eigen::Vector3d& n) {
  GBuffer g(1, 1);
  g.coverage[0] = 1;
  g.face[0] = 0;
  g.normal[0] = n;
  return g;
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = nd(rng);
  return v;
}

double loss_over_views(const SdfGrid& grid, const std::vector<Camera>& cams,
                       const std::vector<std::vector<Eigen::Vector3d>>& targets, std::vector<double>* grad) {
  const TriMesh mesh = marching_cubes(grid, 1);
  const int size = cams.front().width();
  std::vector<Eigen::Vector3d> dv(mesh.vertices.size(), Eigen::Vector3d::Zero());
  double total = 0.0;
  for (std::size_t v = 0; v < cams.size(); ++v) {
    const GBuffer g = render_gbuffer(mesh, cams[v], size, size);
    const std::vector<std::uint8_t> valid(g.pixel_count(), 1);
    std::vector<Eigen::Vector3d> target = targets[v];
    const SfsLossResult r = sfs_loss_and_vertex_grads(g, mesh, target, valid);
    total += r.loss;
    for (std::size_t j = 0; j < dv.size(); ++j) dv[j] += r.vertex_grads[j];
  }
  if (grad) *grad = chain_to_theta(mesh, dv, grid);
  return total;
}

}  // namespace

TEST_SUITE("levelset") {
  TEST_CASE("SfS loss arithmetic") {
    const GBuffer g = one_pixel(Eigen::Vector3d(0, 0, 1));
    const std::vector<std::uint8_t> valid{1};
    const std::vector<Eigen::Vector3d> same{Eigen::Vector3d(0, 0, 1)};
    double loss = -1.0;
    std::size_t pixels = 0;
    auto grads = sfs_loss_pixel_grads(g, same, valid, &loss, &pixels);
    CHECK(loss == 0.0);
    CHECK(pixels == 1);
    CHECK(grads[0] == Eigen::Vector3d::Zero());
    const std::vector<Eigen::Vector3d> other{Eigen::Vector3d(0, 1, 0)};
    grads = sfs_loss_pixel_grads(g, other, valid, &loss, &pixels);
    CHECK(loss == doctest::Approx(2.0));
    CHECK(grads[0] == Eigen::Vector3d(0, -1, 1));
  }

  TEST_CASE("SfS loss without valid pixels is undefined") {
    const GBuffer g = one_pixel(Eigen::Vector3d(0, 0, 1));
    const std::vector<std::uint8_t> valid{0};
    const std::vector<Eigen::Vector3d> target{Eigen::Vector3d(0, 0, 1)};
    try {
      sfs_loss_pixel_grads(g, target, valid, nullptr, nullptr);
      FAIL("expected loss_undefined");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::LossUndefined);
    }
  }

  TEST_CASE("chain_to_theta: zero input, tangency, linearity and domain") {
    const SdfGrid grid = testing::sphere_grid(20, 0.1, 0.6);
    const TriMesh mesh = marching_cubes(grid, 1);
    REQUIRE_FALSE(mesh.empty());
    const std::vector<Eigen::Vector3d> zero(mesh.vertices.size(), Eigen::Vector3d::Zero());
    for (double x : chain_to_theta(mesh, zero, grid)) REQUIRE(x == 0.0);

    std::mt19937_64 rng(1);
    std::vector<Eigen::Vector3d> tangent(mesh.vertices.size());
    for (std::size_t j = 0; j < tangent.size(); ++j) {
      const Eigen::Vector3d n = eval_gradient(grid, mesh.vertices[j]);
      tangent[j] = n.cross(testing::random_unit(rng));
    }
    double worst = 0.0;
    for (double x : chain_to_theta(mesh, tangent, grid)) worst = std::max(worst, std::abs(x));
    CHECK(worst < 1e-12);

    std::normal_distribution<double> nd;
    std::vector<Eigen::Vector3d> a(mesh.vertices.size()), b(mesh.vertices.size()), mix(mesh.vertices.size());
    const double alpha = 0.7, beta = -2.3;
    for (std::size_t j = 0; j < a.size(); ++j) {
      a[j] = Eigen::Vector3d(nd(rng), nd(rng), nd(rng));
      b[j] = Eigen::Vector3d(nd(rng), nd(rng), nd(rng));
      mix[j] = alpha * a[j] + beta * b[j];
    }
    const auto ga = chain_to_theta(mesh, a, grid);
    const auto gb = chain_to_theta(mesh, b, grid);
    const auto gm = chain_to_theta(mesh, mix, grid);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < gm.size(); ++i) {
      err = std::max(err, std::abs(gm[i] - (alpha * ga[i] + beta * gb[i])));
      scale = std::max(scale, std::abs(gm[i]));
    }
    CHECK(err <= 1e-10 * scale);

    TriMesh outside = mesh;
    outside.vertices[3] = Eigen::Vector3d(50, 0, 0);
    try {
      chain_to_theta(outside, a, grid);
      FAIL("expected domain error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Domain);
      CHECK(std::string(e.what()).find("vertex 3") != std::string::npos);
    }
  }

  TEST_CASE("Adam: zero gradient, first step and non-finite input") {
    std::mt19937_64 rng(2);
    std::vector<double> theta = random_vector(50, rng);
    const std::vector<double> start = theta;
    AdamState st(theta.size(), 0.01);
    st.m.assign(theta.size(), 0.5);
    st.v.assign(theta.size(), 0.25);
    adam_step(theta, std::vector<double>(theta.size(), 0.0), st);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      CHECK(st.m[i] == doctest::Approx(0.45));
      CHECK(st.v[i] == doctest::Approx(0.25 * 0.999));
    }
    // Zero gradient with zero moments leaves theta untouched.
    std::vector<double> still = start;
    AdamState fresh(still.size(), 0.01);
    adam_step(still, std::vector<double>(still.size(), 0.0), fresh);
    CHECK(still == start);

    for (double g : {3.0, -0.02, 1e3}) {
      std::vector<double> t = start;
      AdamState s(t.size(), 0.05);
      adam_step(t, std::vector<double>(t.size(), g), s);
      for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] - start[i] == doctest::Approx(-0.05 * (g > 0 ? 1 : -1)).epsilon(1e-5));
    }

    std::vector<double> grad(theta.size(), 1.0);
    grad[7] = std::nan("");
    AdamState s(theta.size(), 0.05);
    try {
      adam_step(theta, grad, s);
      FAIL("expected optimizer error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Optimizer);
    }
  }

  TEST_CASE("Adam converges on a quadratic") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    std::vector<double> target(40), theta(40, 0.0), grad(40);
    for (double& t : target) t = u(rng);
    AdamState st(theta.size(), 0.05);
    for (int step = 0; step < 100; ++step) {
      for (std::size_t i = 0; i < theta.size(); ++i) grad[i] = 2.0 * (theta[i] - target[i]);
      adam_step(theta, grad, st);
      for (double t : theta) REQUIRE(std::isfinite(t));
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) worst = std::max(worst, std::abs(theta[i] - target[i]));
    CHECK(worst < 1e-3);
  }

  TEST_CASE("hull clamp: idempotence, total clamp, monotonicity, layout") {
    const SdfGrid hull = testing::sphere_grid(16, 0.1, 0.5);
    SdfGrid same = hull;
    hull_clamp(same, hull);
    CHECK(std::equal(same.coeffs().begin(), same.coeffs().end(), hull.coeffs().begin()));

    SdfGrid below = hull;
    for (double& c : below.coeffs()) c -= 1.0;
    hull_clamp(below, hull);
    CHECK(std::equal(below.coeffs().begin(), below.coeffs().end(), hull.coeffs().begin()));

    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd(0.0, 0.3);
    SdfGrid a = hull, b = hull;
    for (std::size_t i = 0; i < a.size(); ++i) {
      a.coeffs()[i] += nd(rng);
      b.coeffs()[i] = a.coeffs()[i] + std::abs(nd(rng));
    }
    hull_clamp(a, hull);
    hull_clamp(b, hull);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.coeffs()[i] <= b.coeffs()[i]);
    SdfGrid twice = a;
    hull_clamp(twice, hull);
    CHECK(std::equal(twice.coeffs().begin(), twice.coeffs().end(), a.coeffs().begin()));

    SdfGrid other(Eigen::Vector3d::Zero(), 0.1, {16, 16, 15});
    CHECK_THROWS_AS(hull_clamp(other, hull), Error);
  }

  TEST_CASE("clamped surfaces stay inside the hull") {
    const SdfGrid hull = testing::sphere_grid(24, 0.1, 0.8);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      SdfGrid g = testing::sphere_grid(24, 0.1, 0.9, Eigen::Vector3d(0.15, -0.1, 0.05));
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> nd(0.0, 0.05);
      for (double& c : g.coeffs()) c += nd(rng);
      hull_clamp(g, hull);
      const TriMesh mesh = marching_cubes(g, 2);
      REQUIRE_FALSE(mesh.empty());
      double worst = -1e300;
      for (const auto& v : mesh.vertices) worst = std::max(worst, eval_field(hull, v));
      CHECK(worst <= 1e-6 + hull.spacing());
    }
  }

  TEST_CASE("descent toward a translated sphere strictly decreases the loss") {
    const double h = 0.08;
    const SdfGrid truth = testing::sphere_grid(32, h, 0.7, Eigen::Vector3d(0.06, 0.0, 0.0));
    SdfGrid grid = testing::sphere_grid(32, h, 0.7);
    const TriMesh truth_mesh = marching_cubes(truth, 2);
    std::vector<Camera> cams;
    std::vector<std::vector<Eigen::Vector3d>> targets;
    for (int v = 0; v < 4; ++v) {
      cams.push_back(testing::orbit_camera(0.3 + 1.6 * v, v % 2 ? 0.4 : -0.3, 4.0, 64, 100.0));
      const GBuffer g = render_gbuffer(truth_mesh, cams.back(), 64, 64);
      std::vector<Eigen::Vector3d> t = g.normal;
      // Outside the true silhouette, use the rendered normal of the current surface: no signal there.
      const GBuffer cur = render_gbuffer(marching_cubes(grid, 1), cams.back(), 64, 64);
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (!g.coverage[i]) t[i] = cur.normal[i];
      }
      targets.push_back(std::move(t));
    }
    AdamState adam(grid.size(), 0.01 * h);
    std::vector<double> grad;
    double prev = loss_over_views(grid, cams, targets, &grad);
    const double start = prev;
    int decreases = 0;
    for (int step = 0; step < 50; ++step) {
      adam_step(grid.coeffs(), grad, adam);
      for (double c : grid.coeffs()) REQUIRE(std::isfinite(c));
      const double cur = loss_over_views(grid, cams, targets, &grad);
      decreases += cur < prev;
      prev = cur;
    }
    CHECK(decreases == 50);
    CHECK(prev < start);
  }
}
