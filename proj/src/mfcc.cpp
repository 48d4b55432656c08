#include "stt/mfcc.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>

namespace stt {

int FeatureConfig::frame_len() const {
  return static_cast<int>(std::llround(frame_ms * sample_rate_hz / 1000.0));
}

int FeatureConfig::hop_len() const {
  return static_cast<int>(std::llround(hop_ms * sample_rate_hz / 1000.0));
}

int FeatureConfig::fft_size() const {
  if (n_fft > 0) return n_fft;
  int size = 1;
  while (size < frame_len()) size <<= 1;
  return size;
}

double FeatureConfig::resolved_fmax() const {
  return fmax_hz > 0.0 ? fmax_hz : sample_rate_hz / 2.0;
}

void FeatureConfig::validate() const {
  if (sample_rate_hz <= 0) {
    throw std::invalid_argument("FeatureConfig: sample rate must be positive");
  }
  if (frame_ms <= 0.0 || hop_ms <= 0.0) {
    throw std::invalid_argument("FeatureConfig: frame and hop must be positive");
  }
  if (pre_emphasis_alpha < 0.0 || pre_emphasis_alpha >= 1.0) {
    throw std::invalid_argument("FeatureConfig: pre-emphasis alpha must be in [0, 1)");
  }
  if (n_filters < 1) {
    throw std::invalid_argument("FeatureConfig: need at least one filter");
  }
  if (n_ceps < 1 || n_ceps >= n_filters) {
    // c0 is excluded, so only n_filters - 1 cepstra are available
    throw std::invalid_argument("FeatureConfig: n_ceps must be in [1, n_filters)");
  }
  if (delta_window < 1) {
    throw std::invalid_argument("FeatureConfig: delta window must be >= 1");
  }
  if (log_floor <= 0.0) {
    throw std::invalid_argument("FeatureConfig: log floor must be positive");
  }
  const double fmax = resolved_fmax();
  if (fmin_hz < 0.0 || fmin_hz >= fmax) {
    throw std::invalid_argument("FeatureConfig: need 0 <= fmin < fmax");
  }
  if (fmax > sample_rate_hz / 2.0 + 1e-9) {
    throw std::invalid_argument("FeatureConfig: fmax above Nyquist");
  }
  if (n_fft > 0 && n_fft < frame_len()) {
    throw std::invalid_argument("FeatureConfig: n_fft smaller than frame length");
  }
}

double hz_to_mel(double f_hz) {
  if (f_hz < 0.0) {
    throw std::invalid_argument("hz_to_mel: negative frequency");
  }
  return 2595.0 * std::log10(1.0 + f_hz / 700.0);
}

double mel_to_hz(double mel) {
  if (mel < 0.0) {
    throw std::invalid_argument("mel_to_hz: negative mel value");
  }
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterBank build_mel_filterbank(const FeatureConfig& config) {
  // Only the fields the bank depends on; the cepstral fields are checked by
  // the callers that use them, so a one-filter diagnostic bank stays legal.
  if (config.sample_rate_hz <= 0) {
    throw std::invalid_argument("build_mel_filterbank: sample rate must be positive");
  }
  if (config.n_filters < 1) {
    throw std::invalid_argument("build_mel_filterbank: need at least one filter");
  }
  if (config.fmin_hz < 0.0 || config.fmin_hz >= config.resolved_fmax()) {
    throw std::invalid_argument("build_mel_filterbank: need 0 <= fmin < fmax");
  }
  if (config.resolved_fmax() > config.sample_rate_hz / 2.0 + 1e-9) {
    throw std::invalid_argument("build_mel_filterbank: fmax above Nyquist");
  }
  const int n_fft = config.fft_size();
  const int n_bins = n_fft / 2 + 1;
  const int n_filters = config.n_filters;
  const double fmin = config.fmin_hz;
  const double fmax = config.resolved_fmax();

  // F+2 edge points equally spaced on the mel scale, mapped back to Hz and
  // snapped to DFT bin indices (bin k sits at k*sr/n_fft).
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  const double mel_step = (mel_hi - mel_lo) / (n_filters + 1);

  std::vector<int> edge_bins(n_filters + 2);
  for (int i = 0; i < n_filters + 2; ++i) {
    const double hz = mel_to_hz(mel_lo + i * mel_step);
    edge_bins[i] = static_cast<int>(
        std::llround(hz * n_fft / config.sample_rate_hz));
  }
  for (int i = 1; i < n_filters + 2; ++i) {
    if (edge_bins[i] <= edge_bins[i - 1]) {
      throw std::invalid_argument(
          "build_mel_filterbank: too many filters for the bin resolution "
          "(edges " + std::to_string(i - 1) + " and " + std::to_string(i) +
          " collapse to bin " + std::to_string(edge_bins[i - 1]) + ")");
    }
  }

  MelFilterBank bank;
  bank.fmin_hz = fmin;
  bank.fmax_hz = fmax;
  bank.weights = Matrix(n_filters, n_bins);
  bank.center_freqs_hz.resize(n_filters);
  for (int f = 0; f < n_filters; ++f) {
    bank.center_freqs_hz[f] = mel_to_hz(mel_lo + (f + 1) * mel_step);
    const int lo = edge_bins[f];
    const int mid = edge_bins[f + 1];
    const int hi = edge_bins[f + 2];
    for (int k = lo; k <= mid; ++k) {
      bank.weights(f, k) = static_cast<double>(k - lo) / (mid - lo);
    }
    for (int k = mid; k <= hi; ++k) {
      bank.weights(f, k) = static_cast<double>(hi - k) / (hi - mid);
    }
    bank.weights(f, mid) = 1.0;
  }
  return bank;
}

std::vector<double> apply_filterbank(const PowerSpectrum& spec,
                                     const MelFilterBank& bank) {
  if (spec.bins.size() != bank.weights.cols()) {
    throw std::invalid_argument(
        "apply_filterbank: spectrum has " + std::to_string(spec.bins.size()) +
        " bins, bank expects " + std::to_string(bank.weights.cols()));
  }
  std::vector<double> energies(bank.weights.rows(), 0.0);
  for (std::size_t f = 0; f < bank.weights.rows(); ++f) {
    double acc = 0.0;
    for (std::size_t k = 0; k < spec.bins.size(); ++k) {
      acc += bank.weights(f, k) * spec.bins[k];
    }
    energies[f] = acc;
  }
  return energies;
}

std::vector<double> dct_ii(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) {
    throw std::invalid_argument("dct_ii: empty input");
  }
  std::vector<double> out(n, 0.0);
  const double s0 = std::sqrt(1.0 / static_cast<double>(n));
  const double s = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += x[i] * std::cos(std::numbers::pi * static_cast<double>(j) *
                             (static_cast<double>(i) + 0.5) /
                             static_cast<double>(n));
    }
    out[j] = (j == 0 ? s0 : s) * acc;
  }
  return out;
}

std::vector<double> cepstral_transform(std::span<const double> energies,
                                       int n_ceps, double log_floor) {
  if (n_ceps < 1) {
    throw std::invalid_argument("cepstral_transform: n_ceps must be >= 1");
  }
  // with c0 excluded, an F-point DCT only has coefficients c1..c_{F-1}
  if (static_cast<std::size_t>(n_ceps) >= energies.size()) {
    throw std::invalid_argument("cepstral_transform: n_ceps exceeds filter count");
  }
  std::vector<double> logged(energies.size());
  for (std::size_t i = 0; i < energies.size(); ++i) {
    logged[i] = std::log(std::max(energies[i], log_floor));
  }
  const auto coeffs = dct_ii(logged);
  return {coeffs.begin() + 1, coeffs.begin() + 1 + n_ceps};
}

double frame_log_energy(std::span<const double> frame, double log_floor) {
  double acc = 0.0;
  for (double v : frame) acc += v * v;
  return std::log(std::max(acc, log_floor));
}

Matrix compute_deltas(const Matrix& features, int window) {
  if (features.rows() == 0) {
    throw std::invalid_argument("compute_deltas: empty feature matrix");
  }
  if (window < 1) {
    throw std::invalid_argument("compute_deltas: window must be >= 1");
  }
  const auto t_max = static_cast<long>(features.rows()) - 1;
  double denom = 0.0;
  for (int n = 1; n <= window; ++n) denom += static_cast<double>(n) * n;
  denom *= 2.0;

  Matrix out(features.rows(), features.cols());
  for (long t = 0; t <= t_max; ++t) {
    for (std::size_t d = 0; d < features.cols(); ++d) {
      double num = 0.0;
      for (int n = 1; n <= window; ++n) {
        const long ahead = std::min<long>(t + n, t_max);
        const long behind = std::max<long>(t - n, 0L);
        num += n * (features(static_cast<std::size_t>(ahead), d) -
                    features(static_cast<std::size_t>(behind), d));
      }
      out(static_cast<std::size_t>(t), d) = num / denom;
    }
  }
  return out;
}

FeatureMatrix extract_features(const AudioBuffer& audio,
                               const FeatureConfig& config) {
  config.validate();
  if (audio.sample_rate_hz != config.sample_rate_hz) {
    throw std::invalid_argument(
        "extract_features: audio sample rate " +
        std::to_string(audio.sample_rate_hz) + " does not match config " +
        std::to_string(config.sample_rate_hz));
  }
  const auto emphasized = pre_emphasize(audio.samples, config.pre_emphasis_alpha);
  const auto framed = frame_signal(emphasized, config.frame_len(),
                                   config.hop_len(), config.sample_rate_hz);
  const auto bank = build_mel_filterbank(config);
  const int n_fft = config.fft_size();
  const std::size_t n_frames = framed.frames.rows();
  const int n_ceps = config.n_ceps;

  Matrix statics(n_frames, static_cast<std::size_t>(n_ceps) + 1);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const auto frame = framed.frames.row(t);
    const auto windowed = apply_window(frame, config.window);
    const auto spec = power_spectrum(windowed, n_fft, config.sample_rate_hz);
    const auto energies = apply_filterbank(spec, bank);
    const auto cepstra = cepstral_transform(energies, n_ceps, config.log_floor);
    for (int j = 0; j < n_ceps; ++j) {
      statics(t, static_cast<std::size_t>(j)) = cepstra[static_cast<std::size_t>(j)];
    }
    // energy from the unwindowed frame so the window choice cannot alter it
    statics(t, static_cast<std::size_t>(n_ceps)) =
        frame_log_energy(frame, config.log_floor);
  }

  const Matrix delta = compute_deltas(statics, config.delta_window);
  const Matrix delta2 = compute_deltas(delta, config.delta_window);

  const std::size_t block = statics.cols();
  FeatureMatrix out;
  out.config = config;
  out.rows = Matrix(n_frames, 3 * block);
  for (std::size_t t = 0; t < n_frames; ++t) {
    for (std::size_t d = 0; d < block; ++d) {
      out.rows(t, d) = statics(t, d);
      out.rows(t, block + d) = delta(t, d);
      out.rows(t, 2 * block + d) = delta2(t, d);
    }
  }
  return out;
}

std::string feature_csv_header(int n_ceps) {
  std::string header;
  for (int j = 1; j <= n_ceps; ++j) header += "c" + std::to_string(j) + ",";
  header += "logE";
  for (int j = 1; j <= n_ceps + 1; ++j) header += ",d" + std::to_string(j);
  for (int j = 1; j <= n_ceps + 1; ++j) header += ",dd" + std::to_string(j);
  return header;
}

std::string feature_csv(const FeatureMatrix& features) {
  std::string out = feature_csv_header(features.config.n_ceps);
  out += "\n";
  char buf[40];
  for (std::size_t t = 0; t < features.rows.rows(); ++t) {
    for (std::size_t d = 0; d < features.rows.cols(); ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g", features.rows(t, d));
      if (d > 0) out += ",";
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace stt
