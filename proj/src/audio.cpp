#include "stt/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace stt {

namespace {

constexpr double kScale = 32768.0;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("read_wav: cannot open file: " + path.string());
  }
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("read_wav: not a RIFF/WAVE file: " + path.string());
  }

  bool have_fmt = false;
  std::uint16_t format_code = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  AudioBuffer out;

  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const char* id = bytes.data() + pos;
    const std::uint32_t chunk_len = read_u32(p + pos + 4);
    pos += 8;
    if (pos + chunk_len > n) {
      throw std::runtime_error("read_wav: truncated chunk '" +
                               std::string(id, 4) + "' in " + path.string());
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_len < 16) {
        throw std::runtime_error("read_wav: truncated chunk 'fmt ' in " +
                                 path.string());
      }
      format_code = read_u16(p + pos);
      channels = read_u16(p + pos + 2);
      sample_rate = read_u32(p + pos + 4);
      bits = read_u16(p + pos + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) {
        throw std::runtime_error("read_wav: data chunk before fmt chunk in " +
                                 path.string());
      }
      if (format_code != 1) {
        throw std::runtime_error(
            "read_wav: non-PCM encoding (format code " +
            std::to_string(format_code) + ") in " + path.string());
      }
      if (channels != 1) {
        throw std::runtime_error("read_wav: expected mono, got " +
                                 std::to_string(channels) + " channels in " +
                                 path.string());
      }
      if (bits != 16) {
        throw std::runtime_error("read_wav: expected 16-bit samples, got " +
                                 std::to_string(bits) + "-bit in " +
                                 path.string());
      }
      if (sample_rate == 0) {
        throw std::runtime_error("read_wav: zero sample rate in " + path.string());
      }
      const std::size_t n_samples = chunk_len / 2;
      if (n_samples == 0) {
        throw std::runtime_error("read_wav: empty data chunk in " + path.string());
      }
      out.samples.resize(n_samples);
      for (std::size_t i = 0; i < n_samples; ++i) {
        const auto raw = static_cast<std::int16_t>(read_u16(p + pos + 2 * i));
        out.samples[i] = std::clamp(raw / kScale, -1.0, 1.0);
      }
      out.sample_rate_hz = static_cast<int>(sample_rate);
      return out;
    }
    // unknown chunks skipped; RIFF pads chunks to even length
    pos += chunk_len + (chunk_len & 1);
  }
  throw std::runtime_error("read_wav: no data chunk found in " + path.string());
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
  if (audio.samples.empty() || audio.sample_rate_hz <= 0) {
    throw std::invalid_argument("write_wav: empty buffer or bad sample rate");
  }
  const std::uint32_t data_len = static_cast<std::uint32_t>(audio.samples.size() * 2);
  const std::uint32_t sr = static_cast<std::uint32_t>(audio.sample_rate_hz);

  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);   // PCM
  put_u16(out, 1);   // mono
  put_u32(out, sr);
  put_u32(out, sr * 2);  // byte rate
  put_u16(out, 2);       // block align
  put_u16(out, 16);      // bits per sample
  out += "data";
  put_u32(out, data_len);
  for (double s : audio.samples) {
    const double scaled = std::clamp(std::round(s * kScale), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw std::runtime_error("write_wav: cannot open file for writing: " +
                             path.string());
  }
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) {
    throw std::runtime_error("write_wav: write failed: " + path.string());
  }
}

AudioBuffer synthesize(const SignalSpec& spec) {
  if (spec.sample_rate_hz <= 0) {
    throw std::invalid_argument("synthesize: sample rate must be positive");
  }
  if (spec.duration_s <= 0.0) {
    throw std::invalid_argument("synthesize: duration must be positive");
  }
  if (spec.amplitude < 0.0 || spec.amplitude > 1.0) {
    throw std::invalid_argument("synthesize: amplitude must be in [0, 1]");
  }
  const bool tonal =
      spec.kind == SignalKind::sine || spec.kind == SignalKind::harmonic_stack;
  if (tonal && spec.f0_hz >= spec.sample_rate_hz / 2.0) {
    throw std::invalid_argument("synthesize: f0 must be below Nyquist");
  }
  if (tonal && spec.f0_hz <= 0.0) {
    throw std::invalid_argument("synthesize: f0 must be positive");
  }
  if (spec.kind == SignalKind::harmonic_stack && spec.n_harmonics < 1) {
    throw std::invalid_argument("synthesize: need at least one harmonic");
  }

  const auto n = static_cast<std::size_t>(
      std::llround(spec.duration_s * spec.sample_rate_hz));
  if (n == 0) {
    throw std::invalid_argument("synthesize: duration shorter than one sample");
  }

  AudioBuffer out;
  out.sample_rate_hz = spec.sample_rate_hz;
  out.samples.resize(n, 0.0);

  switch (spec.kind) {
    case SignalKind::sine: {
      const double w = 2.0 * std::numbers::pi * spec.f0_hz / spec.sample_rate_hz;
      for (std::size_t i = 0; i < n; ++i) {
        out.samples[i] = spec.amplitude * std::sin(w * static_cast<double>(i));
      }
      break;
    }
    case SignalKind::harmonic_stack: {
      double peak = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        for (int k = 1; k <= spec.n_harmonics; ++k) {
          const double w =
              2.0 * std::numbers::pi * k * spec.f0_hz / spec.sample_rate_hz;
          v += std::sin(w * static_cast<double>(i)) / k;
        }
        out.samples[i] = v;
        peak = std::max(peak, std::abs(v));
      }
      const double gain = peak > 0.0 ? spec.amplitude / peak : 0.0;
      for (double& s : out.samples) s *= gain;
      break;
    }
    case SignalKind::white_noise: {
      // mt19937 output mapped to [0,1) via u/2^32: identical across platforms.
      std::mt19937 rng(static_cast<std::uint32_t>(spec.seed));
      for (std::size_t i = 0; i < n; ++i) {
        const double u = rng() * (1.0 / 4294967296.0);
        out.samples[i] = spec.amplitude * (2.0 * u - 1.0);
      }
      break;
    }
  }
  return out;
}

}  // namespace stt
