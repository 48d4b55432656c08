#pragma once

#include <complex>
#include <span>
#include <vector>

#include "stt/matrix.hpp"

namespace stt {

enum class WindowKind { rectangular, hamming };

// T x L frame table produced by frame_signal.
struct FrameMatrix {
  Matrix frames;  // one row per frame
  int frame_len_samples = 0;
  int hop_samples = 0;
  int sample_rate_hz = 0;
};

// Single-sided power spectrum, bins[k] = |X[k]|^2 for k = 0 .. n_fft/2.
struct PowerSpectrum {
  std::vector<double> bins;
  int n_fft = 0;
  int sample_rate_hz = 0;
};

// y[0] = x[0]; y[n] = x[n] - alpha * x[n-1]. Requires 0 <= alpha < 1.
std::vector<double> pre_emphasize(std::span<const double> samples, double alpha);

// Frame t covers samples [t*hop, t*hop + frame_len); the trailing remainder
// shorter than one frame is dropped. Requires len(samples) >= frame_len.
FrameMatrix frame_signal(std::span<const double> samples, int frame_len_samples,
                         int hop_samples, int sample_rate_hz);

std::vector<double> window_coefficients(WindowKind kind, std::size_t length);

std::vector<double> apply_window(std::span<const double> frame, WindowKind kind);

// In-place iterative radix-2 FFT; a.size() must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a);

// Zero-pads the frame to n_fft (a power of two >= frame length) and returns
// the single-sided power spectrum.
PowerSpectrum power_spectrum(std::span<const double> frame, int n_fft,
                             int sample_rate_hz);

}  // namespace stt
