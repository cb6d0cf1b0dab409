#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gpc/spectral_grid.hpp"
#include "support.hpp"

using namespace gpc;
using test::kPi;

TEST_CASE("grid layout") {
  const SpatialGrid<double> g(20, 256);
  CHECK(g.spacing() == doctest::Approx(40.0 / 256));
  CHECK(g.nodes()[0] == -20);
  CHECK(g.nodes()[255] == doctest::Approx(20 - g.spacing()));
  CHECK(g.wavenumbers()[0] == 0);
  CHECK(g.wavenumbers()[1] == doctest::Approx(kPi / 20));
  CHECK(g.wavenumbers()[128] == doctest::Approx(128 * kPi / 20));  // Nyquist carries the positive sign
  CHECK(g.wavenumbers()[255] == doctest::Approx(-kPi / 20));
  for (Eigen::Index j = 1; j < 128; ++j) CHECK(g.wavenumbers()[j] == -g.wavenumbers()[256 - j]);
}

TEST_CASE("invalid grids are rejected") {
  CHECK_THROWS_AS(SpatialGrid<double>(20, 255), std::invalid_argument);
  CHECK_THROWS_AS(SpatialGrid<double>(0, 256), std::invalid_argument);
  CHECK_THROWS_AS(SpatialGrid<double>(std::nan(""), 256), std::invalid_argument);
}

TEST_CASE("inner product") {
  const auto g = make_grid(20.0, 256);
  const ComplexVector<double> psi = test::gaussian(*g, 1.0, 1.3, 0.7);
  CHECK(inner(*g, psi, psi) == doctest::Approx(1.0).epsilon(1e-14));
  const ComplexVector<double> ipsi = std::complex<double>(0, 1) * psi;
  CHECK(std::abs(inner(*g, psi, ipsi)) < 1e-16);

  SUBCASE("two Gaussians against a ten times finer rectangle rule") {
    auto f = [](double x, double c, double s) { return std::exp(-(x - c) * (x - c) / (2 * s * s)); };
    ComplexVector<double> a(256), b(256);
    for (Eigen::Index i = 0; i < 256; ++i) {
      a[i] = f(g->nodes()[i], 0.5, 1.1);
      b[i] = std::polar(f(g->nodes()[i], -0.8, 2.0), 0.3);
    }
    const SpatialGrid<double> fine(20, 2560);
    double oracle = 0;
    for (Eigen::Index i = 0; i < 2560; ++i) {
      const double x = fine.nodes()[i];
      oracle += fine.spacing() * f(x, 0.5, 1.1) * f(x, -0.8, 2.0) * std::cos(0.3);
    }
    CHECK(inner(*g, a, b) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("inner is symmetric and real-bilinear") {
  std::mt19937_64 rng(7);
  const auto g = make_grid(5.0, 32);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = test::random_field(32, rng), y = test::random_field(32, rng), z = test::random_field(32, rng);
    const double s = std::normal_distribution<double>()(rng);
    CHECK(inner(*g, x, y) == doctest::Approx(inner(*g, y, x)).epsilon(1e-13));
    const ComplexVector<double> sx_z = s * x + z;
    CHECK(inner(*g, sx_z, y) == doctest::Approx(s * inner(*g, x, y) + inner(*g, z, y)).epsilon(1e-12));
    CHECK(inner(*g, x, x) >= 0);
    CHECK(inner(*g, x, x) == doctest::Approx(mass(*g, x)).epsilon(1e-14));
  }
}

TEST_CASE("fields on different grids do not mix") {
  const auto a = make_grid(20.0, 64), b = make_grid(10.0, 64);
  const WaveField<double> u(a, ComplexVector<double>::Ones(64)), v(b, ComplexVector<double>::Ones(64));
  CHECK_THROWS_AS(inner(u, v), GridMismatch);
  CHECK_THROWS_AS(WaveField<double>(a, ComplexVector<double>::Ones(10)), GridMismatch);
}

TEST_CASE("kinetic multiplier") {
  const SpatialGrid<double> g(20, 64);
  const auto one = kinetic_multiplier(g, 0.0);
  for (auto z : one) CHECK(z == std::complex<double>(1, 0));
  const double tau = 10.0 / 1024;
  const auto K = kinetic_multiplier(g, tau);
  CHECK(K[0] == std::complex<double>(1, 0));
  for (auto z : K) CHECK(std::abs(z) == doctest::Approx(1.0).epsilon(1e-15));
  const double k = g.wavenumbers()[5];
  const std::complex<double> expected = std::exp(std::complex<double>(0, -0.5 * k * k * tau));
  CHECK(std::abs(K[5] - expected) < 1e-15);
  CHECK_THROWS_AS(kinetic_multiplier(g, std::nan("")), std::invalid_argument);
}

TEST_CASE("spectral gradient norm") {
  const auto g = make_grid(20.0, 256);
  CHECK(std::abs(spectral_gradient_norm_sq(WaveField<double>(g, ComplexVector<double>::Constant(256, 0.3)))) < 1e-20);

  SUBCASE("plane wave") {
    for (int m : {1, 7, -12, 128}) {
      const double k = m * kPi / 20;
      ComplexVector<double> psi(256);
      for (Eigen::Index i = 0; i < 256; ++i) psi[i] = std::polar(1 / std::sqrt(40.0), k * g->nodes()[i]);
      CHECK(spectral_gradient_norm_sq(WaveField<double>(g, psi)) == doctest::Approx(k * k).epsilon(1e-12));
    }
  }
  SUBCASE("Gaussian against the closed form 1 / (2 s^2)") {
    const double s = 1.7;
    const ComplexVector<double> psi = test::gaussian(*g, 0.0, s);
    CHECK(spectral_gradient_norm_sq(WaveField<double>(g, psi)) == doctest::Approx(1 / (2 * s * s)).epsilon(1e-12));
  }
}

TEST_CASE("Parseval and round trip") {
  std::mt19937_64 rng(11);
  const SpatialGrid<double> g(20, 128);
  SpectralTransform<double> t(128);
  for (int trial = 0; trial < 5; ++trial) {
    const ComplexVector<double> psi = test::random_field(128, rng);
    ComplexVector<double> hat(128), back(128);
    t.forward(psi, hat);
    t.inverse(hat, back);
    CHECK((back - psi).norm() / psi.norm() < 1e-12);
    const double physical = g.spacing() * psi.squaredNorm();
    const double spectral = g.spacing() * hat.squaredNorm() / 128;
    CHECK(physical == doctest::Approx(spectral).epsilon(1e-12));
  }
}
