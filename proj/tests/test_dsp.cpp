#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "stt/dsp.hpp"
#include "test_util.hpp"

TEST_CASE("pre_emphasize matches the difference-equation examples") {
  const std::vector<double> ones{1.0, 1.0, 1.0, 1.0};
  const auto y = stt::pre_emphasize(ones, 0.97);
  REQUIRE(y.size() == 4);
  CHECK(y[0] == 1.0);
  CHECK(y[1] == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(y[2] == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(y[3] == doctest::Approx(0.03).epsilon(1e-12));

  const std::vector<double> impulse{1.0, 0.0, 0.0};
  const auto h = stt::pre_emphasize(impulse, 0.97);
  CHECK(h[0] == 1.0);
  CHECK(h[1] == doctest::Approx(-0.97).epsilon(1e-12));
  CHECK(h[2] == 0.0);

  const std::vector<double> x{0.3, -0.2, 0.9};
  CHECK(stt::pre_emphasize(x, 0.0) == x);
}

TEST_CASE("pre_emphasize attenuates DC after the first sample") {
  const std::vector<double> dc(50, 0.8);
  const auto y = stt::pre_emphasize(dc, 0.9);
  for (std::size_t i = 1; i < y.size(); ++i) {
    CHECK(std::abs(y[i]) == doctest::Approx((1.0 - 0.9) * 0.8).epsilon(1e-12));
  }
}

TEST_CASE("pre_emphasize rejects alpha outside [0, 1)") {
  const std::vector<double> x{1.0};
  CHECK(tu::expect_throw([&] { stt::pre_emphasize(x, 1.0); }, "alpha") == "");
  CHECK(tu::expect_throw([&] { stt::pre_emphasize(x, -0.1); }, "alpha") == "");
}

TEST_CASE("frame_signal frame-count arithmetic") {
  const std::vector<double> x400(400, 1.0);
  CHECK(stt::frame_signal(x400, 400, 160, 16000).frames.rows() == 1);

  const std::vector<double> x560(560, 1.0);
  CHECK(stt::frame_signal(x560, 400, 160, 16000).frames.rows() == 2);

  const std::vector<double> x399(399, 1.0);
  CHECK(tu::expect_throw([&] { stt::frame_signal(x399, 400, 160, 16000); },
                         "shorter") == "");
}

TEST_CASE("frame_signal rows are exact slices at t*hop") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> len_d(50, 2000);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = len_d(rng);
    const int l = std::uniform_int_distribution<int>(1, n)(rng);
    const int h = std::uniform_int_distribution<int>(1, l)(rng);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);

    const auto fm = stt::frame_signal(x, l, h, 16000);
    const auto t_expect = 1 + (n - l) / h;
    REQUIRE(fm.frames.rows() == static_cast<std::size_t>(t_expect));
    for (std::size_t t = 0; t < fm.frames.rows(); ++t) {
      for (std::size_t i = 0; i < fm.frames.cols(); ++i) {
        REQUIRE(fm.frames(t, i) ==
                static_cast<double>(t * static_cast<std::size_t>(h) + i));
      }
    }
  }
}

TEST_CASE("window shapes") {
  const std::vector<double> frame{0.5, -0.25, 1.0};
  CHECK(stt::apply_window(frame, stt::WindowKind::rectangular) == frame);

  const auto w = stt::window_coefficients(stt::WindowKind::hamming, 3);
  REQUIRE(w.size() == 3);
  CHECK(w[0] == doctest::Approx(0.08).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w[2] == doctest::Approx(0.08).epsilon(1e-12));

  const std::vector<double> zeros(16, 0.0);
  for (double v : stt::apply_window(zeros, stt::WindowKind::hamming)) {
    CHECK(v == 0.0);
  }
}

TEST_CASE("power_spectrum closed-form cases") {
  const int n = 64;
  const std::vector<double> ones(n, 1.0);
  const auto dc = stt::power_spectrum(ones, n, 16000);
  REQUIRE(dc.bins.size() == static_cast<std::size_t>(n) / 2 + 1);
  CHECK(dc.bins[0] == doctest::Approx(n * n).epsilon(1e-12));
  for (std::size_t k = 1; k < dc.bins.size(); ++k) {
    CHECK(dc.bins[k] == doctest::Approx(0.0).scale(n * n).epsilon(1e-9));
  }

  const int k0 = 5;
  std::vector<double> cosine(n);
  for (int i = 0; i < n; ++i) {
    cosine[static_cast<std::size_t>(i)] =
        std::cos(2.0 * std::numbers::pi * k0 * i / n);
  }
  const auto spec = stt::power_spectrum(cosine, n, 16000);
  CHECK(spec.bins[k0] == doctest::Approx(n * n / 4.0).epsilon(1e-9));
  for (std::size_t k = 0; k < spec.bins.size(); ++k) {
    if (k == k0) continue;
    CHECK(spec.bins[k] == doctest::Approx(0.0).scale(n * n / 4.0).epsilon(1e-9));
  }
}

TEST_CASE("power_spectrum agrees with the direct DFT oracle") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int n_fft = 1 << std::uniform_int_distribution<int>(1, 10)(rng);
    const int frame_len = std::uniform_int_distribution<int>(1, n_fft)(rng);
    const auto frame =
        tu::random_signal(rng, static_cast<std::size_t>(frame_len));

    const auto fast = stt::power_spectrum(frame, n_fft, 16000);
    const auto slow = tu::naive_power_bins(frame, n_fft);
    REQUIRE(fast.bins.size() == slow.size());
    const double scale = std::max(1.0, tu::max_abs(slow));
    for (std::size_t k = 0; k < slow.size(); ++k) {
      CHECK(std::abs(fast.bins[k] - slow[k]) <= 1e-9 * scale);
    }
  }
}

TEST_CASE("Parseval holds against the frame energy") {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 << std::uniform_int_distribution<int>(3, 9)(rng);
    const auto x = tu::random_signal(rng, static_cast<std::size_t>(n));
    const auto spec = stt::power_spectrum(x, n, 16000);

    // reassemble the full-spectrum energy from the single-sided bins
    double spectral = spec.bins[0] + spec.bins[static_cast<std::size_t>(n) / 2];
    for (std::size_t k = 1; k < static_cast<std::size_t>(n) / 2; ++k) {
      spectral += 2.0 * spec.bins[k];
    }
    double time = 0.0;
    for (double v : x) time += v * v;
    CHECK(spectral == doctest::Approx(n * time).epsilon(1e-6));
  }
}

TEST_CASE("power_spectrum validates n_fft") {
  const std::vector<double> x(10, 1.0);
  CHECK(tu::expect_throw([&] { stt::power_spectrum(x, 12, 16000); },
                         "power of two") == "");
  CHECK(tu::expect_throw([&] { stt::power_spectrum(x, 8, 16000); }, "n_fft") ==
        "");
}
