#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace stt {

// Normalized mono PCM: samples in [-1, 1], fixed scale 1/32768.
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate_hz = 0;

  double duration_s() const {
    return sample_rate_hz > 0
               ? static_cast<double>(samples.size()) / sample_rate_hz
               : 0.0;
  }
};

enum class SignalKind { sine, harmonic_stack, white_noise };

struct SignalSpec {
  SignalKind kind = SignalKind::sine;
  double f0_hz = 100.0;
  double duration_s = 1.0;
  double amplitude = 1.0;   // peak amplitude in [0, 1]
  int n_harmonics = 5;      // harmonic_stack only
  std::uint64_t seed = 0;   // white_noise only
  int sample_rate_hz = 16000;
};

// Reads a RIFF/WAVE file. Mono 16-bit PCM only; unknown chunks are skipped.
// Samples are raw int16 divided by 32768.
AudioBuffer read_wav(const std::filesystem::path& path);

// Writes mono 16-bit PCM. Quantization is round(sample * 32768) clamped to
// int16 range, so a buffer that came from read_wav round-trips bit-exactly.
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

// Deterministic test-signal generator. Noise uses mt19937 with the mapping
// described in the README, frozen for golden tests.
AudioBuffer synthesize(const SignalSpec& spec);

}  // namespace stt
