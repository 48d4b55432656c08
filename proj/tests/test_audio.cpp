#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "stt/audio.hpp"
#include "test_util.hpp"

namespace {

void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& s, std::uint32_t v) {
  put16(s, static_cast<std::uint16_t>(v & 0xffff));
  put16(s, static_cast<std::uint16_t>(v >> 16));
}

// Hand-assembled RIFF bytes so the parser is checked against ground truth
// rather than against write_wav.
std::string wav_bytes(const std::vector<std::int16_t>& samples,
                      std::uint32_t sr, std::uint16_t channels = 1,
                      std::uint16_t bits = 16, std::uint16_t format = 1,
                      const std::string& extra_chunk = {}) {
  std::string data;
  for (std::int16_t s : samples) put16(data, static_cast<std::uint16_t>(s));

  std::string body;
  body += "WAVE";
  body += extra_chunk;
  body += "fmt ";
  put32(body, 16);
  put16(body, format);
  put16(body, channels);
  put32(body, sr);
  put32(body, sr * channels * bits / 8);
  put16(body, static_cast<std::uint16_t>(channels * bits / 8));
  put16(body, bits);
  body += "data";
  put32(body, static_cast<std::uint32_t>(data.size()));
  body += data;

  std::string out = "RIFF";
  put32(out, static_cast<std::uint32_t>(body.size()));
  out += body;
  return out;
}

}  // namespace

TEST_CASE("read_wav maps 16-bit PCM onto [-1, 1] with the 1/32768 scale") {
  tu::TempDir dir;
  const auto path = dir / "mono.wav";

  tu::spit(path, wav_bytes({16384}, 16000));
  const auto one = stt::read_wav(path);
  CHECK(one.sample_rate_hz == 16000);
  REQUIRE(one.samples.size() == 1);
  CHECK(one.samples[0] == 0.5);

  tu::spit(path, wav_bytes({0, -32768}, 8000));
  const auto pair = stt::read_wav(path);
  CHECK(pair.sample_rate_hz == 8000);
  REQUIRE(pair.samples.size() == 2);
  CHECK(pair.samples[0] == 0.0);
  CHECK(pair.samples[1] == -1.0);
}

TEST_CASE("read_wav skips unknown chunks, including odd-length padding") {
  tu::TempDir dir;
  const auto path = dir / "extra.wav";

  std::string list = "LIST";
  put32(list, 5);
  list += "INFO";
  list.push_back('x');
  list.push_back('\0');  // pad byte: chunks are word-aligned
  tu::spit(path, wav_bytes({100, -100}, 16000, 1, 16, 1, list));

  const auto buf = stt::read_wav(path);
  REQUIRE(buf.samples.size() == 2);
  CHECK(buf.samples[0] == 100.0 / 32768.0);
}

TEST_CASE("read_wav failure modes are reported distinctly") {
  tu::TempDir dir;
  const auto path = dir / "bad.wav";

  CHECK(tu::expect_throw([&] { stt::read_wav(dir / "missing.wav"); },
                         "cannot open") == "");

  tu::spit(path, "not audio at all");
  CHECK(tu::expect_throw([&] { stt::read_wav(path); }, "not a RIFF/WAVE") == "");

  tu::spit(path, wav_bytes({1, 2}, 16000, 2));
  CHECK(tu::expect_throw([&] { stt::read_wav(path); }, "got 2 channels") == "");

  tu::spit(path, wav_bytes({1}, 16000, 1, 16, 3));
  CHECK(tu::expect_throw([&] { stt::read_wav(path); }, "non-PCM") == "");
  CHECK(tu::expect_throw([&] { stt::read_wav(path); }, "format code 3") == "");

  tu::spit(path, wav_bytes({1}, 16000, 1, 8));
  CHECK(tu::expect_throw([&] { stt::read_wav(path); }, "16-bit") == "");

  std::string truncated = wav_bytes({1, 2, 3, 4}, 16000);
  truncated.resize(truncated.size() - 3);
  tu::spit(path, truncated);
  CHECK(tu::expect_throw([&] { stt::read_wav(path); }, "truncated chunk") == "");

  std::string no_data = wav_bytes({}, 16000);
  no_data.resize(no_data.size() - 8);  // drop the empty data chunk entirely
  tu::spit(path, no_data);
  CHECK(tu::expect_throw([&] { stt::read_wav(path); }, "no data chunk") == "");
}

TEST_CASE("write_wav round-trips the byte payload") {
  tu::TempDir dir;
  std::mt19937 rng(42);
  std::uniform_int_distribution<int> d(-32768, 32767);
  std::vector<std::int16_t> samples(777);
  for (auto& s : samples) s = static_cast<std::int16_t>(d(rng));

  const auto original = dir / "orig.wav";
  tu::spit(original, wav_bytes(samples, 16000));
  const auto buf = stt::read_wav(original);

  const auto rewritten = dir / "rewritten.wav";
  stt::write_wav(rewritten, buf);
  CHECK(tu::slurp(original) == tu::slurp(rewritten));
}

TEST_CASE("write_wav clamps out-of-range samples at the int16 rails") {
  tu::TempDir dir;
  const auto path = dir / "clip.wav";
  stt::AudioBuffer buf;
  buf.sample_rate_hz = 16000;
  buf.samples = {1.5, 1.0, -1.0, -2.0};
  stt::write_wav(path, buf);

  const auto back = stt::read_wav(path);
  CHECK(back.samples[0] == 32767.0 / 32768.0);
  CHECK(back.samples[1] == 32767.0 / 32768.0);
  CHECK(back.samples[2] == -1.0);
  CHECK(back.samples[3] == -1.0);
}

TEST_CASE("synthesize sine hits the documented sample values") {
  stt::SignalSpec spec;
  spec.kind = stt::SignalKind::sine;
  spec.f0_hz = 100.0;
  spec.duration_s = 0.01;
  spec.amplitude = 1.0;
  spec.sample_rate_hz = 16000;

  const auto buf = stt::synthesize(spec);
  REQUIRE(buf.samples.size() == 160);
  // sample 40 sits exactly a quarter period into a 100 Hz cycle at 16 kHz
  CHECK(buf.samples[40] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(buf.samples[0] == 0.0);
}

TEST_CASE("synthesize sine peak amplitude matches the requested amplitude") {
  for (double f0 : {100.0, 250.0}) {
    stt::SignalSpec spec;
    spec.kind = stt::SignalKind::sine;
    spec.f0_hz = f0;
    spec.duration_s = 0.1;
    spec.amplitude = 0.73;
    spec.sample_rate_hz = 16000;
    const auto buf = stt::synthesize(spec);
    CHECK(tu::max_abs(buf.samples) == doctest::Approx(0.73).epsilon(1e-6));
  }
}

TEST_CASE("synthesize amplitude zero yields silence") {
  stt::SignalSpec spec;
  spec.amplitude = 0.0;
  spec.duration_s = 0.02;
  const auto buf = stt::synthesize(spec);
  for (double s : buf.samples) CHECK(s == 0.0);
}

TEST_CASE("synthesize harmonic stack renormalizes its peak") {
  stt::SignalSpec spec;
  spec.kind = stt::SignalKind::harmonic_stack;
  spec.f0_hz = 110.0;
  spec.duration_s = 0.2;
  spec.amplitude = 0.45;
  spec.n_harmonics = 5;
  const auto buf = stt::synthesize(spec);
  CHECK(tu::max_abs(buf.samples) == doctest::Approx(0.45).epsilon(1e-9));
}

TEST_CASE("synthesize white noise is seed-deterministic and bounded") {
  stt::SignalSpec spec;
  spec.kind = stt::SignalKind::white_noise;
  spec.duration_s = 0.05;
  spec.amplitude = 0.3;
  spec.seed = 99;

  const auto a = stt::synthesize(spec);
  const auto b = stt::synthesize(spec);
  CHECK(a.samples == b.samples);

  spec.seed = 100;
  const auto c = stt::synthesize(spec);
  CHECK(a.samples != c.samples);
  for (double s : a.samples) CHECK(std::abs(s) <= 0.3);
}

TEST_CASE("synthesize rejects bad specs") {
  stt::SignalSpec spec;
  spec.f0_hz = 9000.0;  // above Nyquist at 16 kHz
  CHECK(tu::expect_throw([&] { stt::synthesize(spec); }, "Nyquist") == "");

  spec = {};
  spec.duration_s = 0.0;
  CHECK(tu::expect_throw([&] { stt::synthesize(spec); }, "duration") == "");

  spec = {};
  spec.amplitude = 1.5;
  CHECK(tu::expect_throw([&] { stt::synthesize(spec); }, "amplitude") == "");
}
