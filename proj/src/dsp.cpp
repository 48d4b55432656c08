#include "stt/dsp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace stt {

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

std::vector<double> pre_emphasize(std::span<const double> samples, double alpha) {
  if (samples.empty()) {
    throw std::invalid_argument("pre_emphasize: empty input");
  }
  if (alpha < 0.0 || alpha >= 1.0) {
    throw std::invalid_argument("pre_emphasize: alpha must be in [0, 1)");
  }
  std::vector<double> out(samples.size());
  out[0] = samples[0];
  for (std::size_t i = 1; i < samples.size(); ++i) {
    out[i] = samples[i] - alpha * samples[i - 1];
  }
  return out;
}

FrameMatrix frame_signal(std::span<const double> samples, int frame_len_samples,
                         int hop_samples, int sample_rate_hz) {
  if (frame_len_samples <= 0 || hop_samples <= 0) {
    throw std::invalid_argument("frame_signal: frame length and hop must be positive");
  }
  const auto n = samples.size();
  const auto len = static_cast<std::size_t>(frame_len_samples);
  if (n < len) {
    throw std::invalid_argument(
        "frame_signal: signal shorter than one frame (" + std::to_string(n) +
        " < " + std::to_string(frame_len_samples) + " samples)");
  }
  const std::size_t n_frames = 1 + (n - len) / static_cast<std::size_t>(hop_samples);

  FrameMatrix out;
  out.frame_len_samples = frame_len_samples;
  out.hop_samples = hop_samples;
  out.sample_rate_hz = sample_rate_hz;
  out.frames = Matrix(n_frames, len);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const std::size_t start = t * static_cast<std::size_t>(hop_samples);
    for (std::size_t i = 0; i < len; ++i) {
      out.frames(t, i) = samples[start + i];
    }
  }
  return out;
}

std::vector<double> window_coefficients(WindowKind kind, std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (kind == WindowKind::hamming && length > 1) {
    for (std::size_t i = 0; i < length; ++i) {
      w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i /
                                    static_cast<double>(length - 1));
    }
  }
  return w;
}

std::vector<double> apply_window(std::span<const double> frame, WindowKind kind) {
  std::vector<double> out(frame.begin(), frame.end());
  if (kind == WindowKind::hamming) {
    const auto w = window_coefficients(kind, frame.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= w[i];
  }
  return out;
}

void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (!is_power_of_two(static_cast<int>(n))) {
    throw std::invalid_argument("fft_radix2: size must be a power of two");
  }
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j |= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t base = 0; base < n; base += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto w = std::polar(1.0, ang * static_cast<double>(k));
        const auto u = a[base + k];
        const auto v = a[base + k + len / 2] * w;
        a[base + k] = u + v;
        a[base + k + len / 2] = u - v;
      }
    }
  }
}

PowerSpectrum power_spectrum(std::span<const double> frame, int n_fft,
                             int sample_rate_hz) {
  if (!is_power_of_two(n_fft)) {
    throw std::invalid_argument("power_spectrum: n_fft must be a power of two");
  }
  if (static_cast<std::size_t>(n_fft) < frame.size()) {
    throw std::invalid_argument("power_spectrum: n_fft smaller than frame length");
  }
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(n_fft));
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
  fft_radix2(buf);

  PowerSpectrum out;
  out.n_fft = n_fft;
  out.sample_rate_hz = sample_rate_hz;
  out.bins.resize(static_cast<std::size_t>(n_fft) / 2 + 1);
  for (std::size_t k = 0; k < out.bins.size(); ++k) {
    out.bins[k] = std::norm(buf[k]);
  }
  return out;
}

}  // namespace stt
