#include <doctest.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rmrecon/camera.hpp"
#include "rmrecon/error.hpp"
#include "rmrecon/image.hpp"
#include "rmrecon/pfm.hpp"
#include "rmrecon/png_mask.hpp"
#include "rmrecon/scene.hpp"
#include "test_support.hpp"

using namespace rmrecon;

namespace {

// Independent PFM writer: header assembled by hand, payload bytes emitted one
// at a time in the requested byte order, rows bottom to top.
std::string reference_pfm(int w, int h, int channels, const std::vector<float>& top_down, bool big_endian) {
  std::string out = (channels == 3 ? "PF\n" : "Pf\n") + std::to_string(w) + " " + std::to_string(h) + "\n" +
                    (big_endian ? "1.0\n" : "-1.0\n");
  for (int row = h - 1; row >= 0; --row) {
    for (int i = 0; i < w * channels; ++i) {
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(top_down[std::size_t(row * w * channels + i)]);
      for (int b = 0; b < 4; ++b) {
        const int shift = big_endian ? 8 * (3 - b) : 8 * b;
        out.push_back(char((bits >> shift) & 0xffu));
      }
    }
  }
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_SUITE("imaging") {
  TEST_CASE("single-pixel Pf file decodes to its value") {
    const std::string bytes = reference_pfm(1, 1, 1, {3.5f}, false);
    const PfmFile f = parse_pfm(bytes);
    CHECK(f.image.width == 1);
    CHECK(f.image.height == 1);
    CHECK(f.image.channels == 1);
    CHECK(f.image.data[0] == 3.5f);
  }

  TEST_CASE("2x2 color files from an independent writer load identically in both byte orders") {
    const std::vector<float> vals = {0.0f, 1.0f, 2.5f, 1e-7f, 3.25f, 100.0f, 7.0f, 0.125f, 9.5f, 1e20f, 0.5f, 6.0f};
    for (bool big : {false, true}) {
      const PfmFile f = parse_pfm(reference_pfm(2, 2, 3, vals, big));
      REQUIRE(f.image.data.size() == vals.size());
      for (std::size_t i = 0; i < vals.size(); ++i) CHECK(f.image.data[i] == vals[i]);
      CHECK(f.layout.little_endian == !big);
      // Writing back reproduces the exact input bytes.
      CHECK(encode_pfm(f) == reference_pfm(2, 2, 3, vals, big));
    }
  }

  TEST_CASE("PFM save/load round trip is bit exact through files") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> u(0.0f, 1e4f);
    ImageF img(17, 9, 3);
    for (float& v : img.data) v = u(rng);
    img.data[5] = std::numeric_limits<float>::denorm_min();
    img.data[6] = std::numeric_limits<float>::max();
    const auto dir = testing::scratch_dir("pfm");
    save_pfm(img, dir / "a.pfm");
    const ImageF back = load_pfm(dir / "a.pfm");
    CHECK(std::memcmp(back.data.data(), img.data.data(), img.data.size() * sizeof(float)) == 0);
    const PfmFile file = read_pfm_file(dir / "a.pfm");
    write_pfm_file(file, dir / "b.pfm");
    CHECK(slurp(dir / "a.pfm") == slurp(dir / "b.pfm"));
  }

  TEST_CASE("malformed PFM input reports a parse error with a byte offset") {
    auto expect_parse_error = [](const std::string& bytes) {
      try {
        parse_pfm(bytes);
        FAIL("expected a parse error");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parse);
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
      }
    };
    expect_parse_error("P6\n1 1\n-1\n0000");
    expect_parse_error("Pf\n-2 1\n-1\n00000000");
    expect_parse_error("Pf\n2 2\n-1\n0000");  // truncated payload
    expect_parse_error("Pf\n2 x\n-1\n");
  }

  TEST_CASE("projection follows the pinhole definition") {
    const Camera cam({500.0, 400.0, 320.0, 240.0}, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(), 640, 480);
    const Projection axis = cam.project({0.0, 0.0, 7.0});
    CHECK(axis.pixel.x() == doctest::Approx(320.0));
    CHECK(axis.pixel.y() == doctest::Approx(240.0));
    CHECK(axis.depth == doctest::Approx(7.0));
    CHECK(axis.in_front);
    const Projection p = cam.project({1.0, -2.0, 4.0});
    CHECK(p.pixel.x() == doctest::Approx(500.0 * 1.0 / 4.0 + 320.0));
    CHECK(p.pixel.y() == doctest::Approx(400.0 * -2.0 / 4.0 + 240.0));
    CHECK_FALSE(cam.project({0.0, 0.0, -1.0}).in_front);
    CHECK_THROWS_AS(cam.project(Eigen::Vector3d::Zero()), Error);
  }

  TEST_CASE("unproject inverts project for random points") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const Camera cam = testing::orbit_camera(0.7, 0.3, 5.0, 200, 240.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Eigen::Vector3d p(u(rng), u(rng), u(rng));
      const Projection pr = cam.project(p);
      if (!pr.in_front) continue;
      worst = std::max(worst, (cam.unproject(pr.pixel, pr.depth) - p).norm() / p.norm());
    }
    CHECK(worst < 1e-9);
  }

  TEST_CASE("camera rotation must be orthonormal with det +1") {
    Eigen::Matrix3d bad = Eigen::Matrix3d::Identity();
    bad(0, 0) = -1.0;
    CHECK_THROWS_AS(Camera({1, 1, 0, 0}, bad, Eigen::Vector3d::Zero(), 4, 4), Error);
    bad = Eigen::Matrix3d::Identity();
    bad(0, 1) = 1e-6;
    CHECK_THROWS_AS(Camera({1, 1, 0, 0}, bad, Eigen::Vector3d::Zero(), 4, 4), Error);
  }

  TEST_CASE("view frame puts camera-facing normals at +z") {
    const Camera cam = testing::orbit_camera(1.1, -0.4, 6.0, 64, 80.0);
    const Eigen::Vector3d toward_camera = cam.center().normalized();
    const Eigen::Vector3d v = cam.view_rotation() * toward_camera;
    CHECK(v.z() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(viewing_direction(cam, Eigen::Vector3d::Zero()).isApprox(toward_camera, 1e-12));
  }

  TEST_CASE("log radiance clamps at the floor and inverts above it") {
    ImageF img(3, 1, 1);
    img.data = {1.0f, 0.0f, 5.0f};
    const ImageF l = log_radiance(img, 1e-6);
    CHECK(l.data[0] == 0.0f);
    CHECK(l.data[1] == doctest::Approx(std::log(1e-6)));
    CHECK(std::exp(double(l.data[2])) == doctest::Approx(5.0).epsilon(1e-6));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> u(0.0f, 50.0f);
    ImageF big(64, 64, 3);
    for (float& v : big.data) v = u(rng);
    const ImageF lb = log_radiance(big);
    for (std::size_t i = 0; i < big.data.size(); ++i) {
      REQUIRE(std::isfinite(lb.data[i]));
      if (big.data[i] >= 1e-6f) CHECK(std::exp(double(lb.data[i])) == doctest::Approx(big.data[i]).epsilon(1e-6));
    }
  }

  TEST_CASE("mask PNG round trip and threshold") {
    MaskImage m(5, 4);
    m.set(1, 1, true);
    m.set(4, 3, true);
    const auto dir = testing::scratch_dir("mask");
    save_mask_png(m, dir / "m.png");
    const MaskImage back = load_mask_png(dir / "m.png");
    CHECK(back.data == m.data);
  }

  TEST_CASE("scene JSON round trip resolves relative paths") {
    const auto dir = testing::scratch_dir("scene");
    SceneConfig s;
    for (int v = 0; v < 2; ++v) {
      ViewConfig vc;
      vc.image = dir / ("img" + std::to_string(v) + ".pfm");
      vc.mask = dir / ("mask" + std::to_string(v) + ".png");
      vc.camera = testing::orbit_camera(v * 1.5, 0.2, 4.0, 32, 40.0);
      s.views.push_back(vc);
      save_pfm(ImageF(32, 32, 3, 1.0f), vc.image);
      save_mask_png(MaskImage(32, 32, true), vc.mask);
    }
    s.volume.min = Eigen::Vector3d::Constant(-1.0);
    s.volume.max = Eigen::Vector3d::Constant(1.0);
    s.grid_res = 32;
    save_scene(s, dir / "scene.json");
    const SceneConfig back = load_scene(dir / "scene.json");
    REQUIRE(back.views.size() == 2);
    CHECK(std::filesystem::equivalent(back.views[1].image, s.views[1].image));
    CHECK(back.views[1].camera.rotation().isApprox(s.views[1].camera.rotation(), 1e-15));
    CHECK(back.grid_res == 32);
    CHECK(load_views(back).size() == 2);
  }

  TEST_CASE("scene validation rejects too few views and empty volumes") {
    SceneConfig s;
    s.volume.max = Eigen::Vector3d::Ones();
    CHECK_THROWS_AS(s.validate(), Error);
    s.views.resize(2);
    CHECK_NOTHROW(s.validate());
    s.volume.max.z() = 0.0;
    CHECK_THROWS_AS(s.validate(), Error);
  }
}
