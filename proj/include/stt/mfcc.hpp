#pragma once

#include <span>
#include <string>
#include <vector>

#include "stt/audio.hpp"
#include "stt/dsp.hpp"
#include "stt/matrix.hpp"

namespace stt {

// Every front-end parameter in one place. n_fft = 0 and fmax_hz = 0 resolve
// to "smallest power of two >= frame length" and Nyquist respectively.
struct FeatureConfig {
  int sample_rate_hz = 16000;
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  double pre_emphasis_alpha = 0.97;
  int n_fft = 0;
  int n_filters = 26;
  int n_ceps = 12;
  int delta_window = 2;
  double log_floor = 1e-10;
  double fmin_hz = 0.0;
  double fmax_hz = 0.0;
  WindowKind window = WindowKind::hamming;

  int frame_len() const;
  int hop_len() const;
  int fft_size() const;       // resolved n_fft
  double resolved_fmax() const;
  int feature_dim() const { return 3 * (n_ceps + 1); }
  void validate() const;      // throws std::invalid_argument on bad values
};

// Triangular filters over power-spectrum bins. center_freqs_hz holds the
// exact mel-equally-spaced design centers; the weight triangles are built on
// edges snapped to DFT bin centers.
struct MelFilterBank {
  Matrix weights;  // n_filters x (n_fft/2 + 1)
  std::vector<double> center_freqs_hz;
  double fmin_hz = 0.0;
  double fmax_hz = 0.0;
};

// T x 39 feature table: [c1..c12, logE, delta(13), delta-delta(13)] per row.
struct FeatureMatrix {
  Matrix rows;
  FeatureConfig config;
};

// m = 2595 * log10(1 + f/700) and its exact inverse.
double hz_to_mel(double f_hz);
double mel_to_hz(double mel);

MelFilterBank build_mel_filterbank(const FeatureConfig& config);

// energies[i] = sum_k weights[i][k] * bins[k]
std::vector<double> apply_filterbank(const PowerSpectrum& spec,
                                     const MelFilterBank& bank);

// Full orthonormal DCT-II of x (all coefficients, including c0).
std::vector<double> dct_ii(std::span<const double> x);

// Floors the filterbank energies at log_floor, takes the natural log, applies
// the orthonormal DCT-II and returns coefficients 1..n_ceps (c0 excluded).
std::vector<double> cepstral_transform(std::span<const double> energies,
                                       int n_ceps, double log_floor);

// ln(max(sum x^2, log_floor)), computed on the pre-emphasized unwindowed frame.
double frame_log_energy(std::span<const double> frame, double log_floor);

// Regression deltas over a +-window frame span with replicated boundaries.
Matrix compute_deltas(const Matrix& features, int window);

FeatureMatrix extract_features(const AudioBuffer& audio,
                               const FeatureConfig& config);

// CSV with header c1..c12,logE,d1..d13,dd1..dd13 and one row per frame,
// full decimal precision. This is the golden-file format.
std::string feature_csv_header(int n_ceps);
std::string feature_csv(const FeatureMatrix& features);

}  // namespace stt
