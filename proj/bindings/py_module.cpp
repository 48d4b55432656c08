// Python surface for the toolkit: feature extraction, synthesis, word-model
// training/recognition, and pitch tracking, all over numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "stt/audio.hpp"
#include "stt/mfcc.hpp"
#include "stt/pitch.hpp"
#include "stt/recognizer.hpp"

namespace py = pybind11;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

stt::AudioBuffer to_buffer(const DoubleArray& samples, int sample_rate) {
  if (samples.ndim() != 1) {
    throw std::invalid_argument("samples must be a 1-D array");
  }
  stt::AudioBuffer buf;
  buf.sample_rate_hz = sample_rate;
  buf.samples.assign(samples.data(),
                     samples.data() + static_cast<std::size_t>(samples.size()));
  return buf;
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<double> to_array(const stt::Matrix& m) {
  py::array_t<double> out({static_cast<py::ssize_t>(m.rows()),
                           static_cast<py::ssize_t>(m.cols())});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

stt::SignalKind parse_kind(const std::string& name) {
  if (name == "sine") return stt::SignalKind::sine;
  if (name == "harmonic_stack") return stt::SignalKind::harmonic_stack;
  if (name == "white_noise") return stt::SignalKind::white_noise;
  throw std::invalid_argument("unknown signal kind: " + name);
}

stt::FeatureConfig make_config(int sample_rate, double frame_ms, double hop_ms,
                               int n_filters, int n_ceps,
                               const std::string& window) {
  stt::FeatureConfig config;
  config.sample_rate_hz = sample_rate;
  config.frame_ms = frame_ms;
  config.hop_ms = hop_ms;
  config.n_filters = n_filters;
  config.n_ceps = n_ceps;
  if (window == "rectangular") {
    config.window = stt::WindowKind::rectangular;
  } else if (window == "hamming") {
    config.window = stt::WindowKind::hamming;
  } else {
    throw std::invalid_argument("unknown window: " + window);
  }
  return config;
}

py::dict transcript_to_dict(const stt::Transcript& t) {
  py::dict d;
  d["label"] = t.label;
  d["margin"] = t.margin;
  py::dict scores;
  for (const auto& [label, value] : t.scores) {
    scores[py::str(label)] = value;
  }
  d["scores"] = scores;
  return d;
}

}  // namespace

PYBIND11_MODULE(sttkit, m) {
  m.doc() = "MFCC + HMM isolated-word speech toolkit";

  m.def("hz_to_mel", &stt::hz_to_mel, py::arg("f_hz"),
        "Mel value of a frequency in Hz: 2595*log10(1 + f/700).");
  m.def("mel_to_hz", &stt::mel_to_hz, py::arg("mel"),
        "Exact inverse of hz_to_mel.");

  m.def(
      "synthesize",
      [](const std::string& kind, double f0, double duration, double amplitude,
         int sample_rate, std::uint64_t seed, int harmonics) {
        stt::SignalSpec spec;
        spec.kind = parse_kind(kind);
        spec.f0_hz = f0;
        spec.duration_s = duration;
        spec.amplitude = amplitude;
        spec.sample_rate_hz = sample_rate;
        spec.seed = seed;
        spec.n_harmonics = harmonics;
        const auto buf = stt::synthesize(spec);
        return py::make_tuple(to_array(buf.samples), buf.sample_rate_hz);
      },
      py::arg("kind") = "sine", py::arg("f0") = 440.0,
      py::arg("duration") = 1.0, py::arg("amplitude") = 0.5,
      py::arg("sample_rate") = 16000, py::arg("seed") = 1,
      py::arg("harmonics") = 5,
      "Deterministic test signal; returns (samples, sample_rate).");

  m.def(
      "read_wav",
      [](const std::string& path) {
        const auto buf = stt::read_wav(path);
        return py::make_tuple(to_array(buf.samples), buf.sample_rate_hz);
      },
      py::arg("path"), "Load 16-bit mono PCM; returns (samples, sample_rate).");

  m.def(
      "write_wav",
      [](const std::string& path, const DoubleArray& samples, int sample_rate) {
        stt::write_wav(path, to_buffer(samples, sample_rate));
      },
      py::arg("path"), py::arg("samples"), py::arg("sample_rate") = 16000);

  m.def(
      "extract_features",
      [](const DoubleArray& samples, int sample_rate, double frame_ms,
         double hop_ms, int n_filters, int n_ceps, const std::string& window) {
        const auto config = make_config(sample_rate, frame_ms, hop_ms,
                                        n_filters, n_ceps, window);
        const auto feats =
            stt::extract_features(to_buffer(samples, sample_rate), config);
        return to_array(feats.rows);
      },
      py::arg("samples"), py::arg("sample_rate") = 16000,
      py::arg("frame_ms") = 25.0, py::arg("hop_ms") = 10.0,
      py::arg("n_filters") = 26, py::arg("n_ceps") = 12,
      py::arg("window") = "hamming",
      "MFCC feature matrix, one row per frame: cepstra, log energy, deltas, "
      "delta-deltas.");

  m.def(
      "pitch_track",
      [](const DoubleArray& samples, int sample_rate, const std::string& method,
         double frame_ms, double hop_ms, double f0_min, double f0_max,
         double voicing_threshold) {
        stt::PitchParams params;
        params.frame_ms = frame_ms;
        params.hop_ms = hop_ms;
        params.f0_min_hz = f0_min;
        params.f0_max_hz = f0_max;
        params.voicing_threshold = voicing_threshold;
        const auto buf = to_buffer(samples, sample_rate);
        stt::PitchTrack track;
        if (method == "xcorr") {
          track = stt::estimate_f0_xcorr(buf, params);
        } else if (method == "peakpick") {
          track = stt::estimate_f0_peakpick(buf, params);
        } else {
          throw std::invalid_argument("unknown method: " + method);
        }
        py::array_t<double> out(
            {static_cast<py::ssize_t>(track.frames.size()), py::ssize_t{3}});
        auto view = out.mutable_unchecked<2>();
        for (py::ssize_t i = 0;
             i < static_cast<py::ssize_t>(track.frames.size()); ++i) {
          const auto& f = track.frames[static_cast<std::size_t>(i)];
          view(i, 0) = f.time_s;
          view(i, 1) = f.f0_hz;  // NaN when unvoiced
          view(i, 2) = f.correlation;
        }
        return out;
      },
      py::arg("samples"), py::arg("sample_rate") = 16000,
      py::arg("method") = "xcorr", py::arg("frame_ms") = 40.0,
      py::arg("hop_ms") = 10.0, py::arg("f0_min") = 75.0,
      py::arg("f0_max") = 500.0, py::arg("voicing_threshold") = 0.45,
      "F0 track as an N x 3 array of (time_s, f0_hz, correlation).");

  m.def(
      "train",
      [](const std::string& manifest, const std::string& out_dir, int states,
         int iters, double tol, std::uint64_t seed) {
        const auto corpus = stt::load_corpus_manifest(manifest);
        stt::FeatureConfig config;
        stt::TrainConfig tc;
        tc.n_states = states;
        tc.max_iters = iters;
        tc.tol = tol;
        tc.seed = seed;
        const auto set = stt::train_word_models(corpus, config, tc);
        stt::save_word_models(out_dir, set);
        py::dict meta;
        for (const auto& [label, info] : set.training_meta) {
          py::dict entry;
          entry["clips"] = info.clip_count;
          entry["iterations"] = info.iterations;
          entry["final_log_likelihood"] = info.final_log_likelihood;
          meta[py::str(label)] = entry;
        }
        return meta;
      },
      py::arg("manifest"), py::arg("out_dir"), py::arg("states") = 5,
      py::arg("iters") = 20, py::arg("tol") = 1e-3, py::arg("seed") = 1,
      "Train one left-to-right Gaussian HMM per label from a "
      "label<TAB>wav manifest and save the model directory. Returns "
      "per-word training stats.");

  m.def(
      "recognize",
      [](const std::string& wav_path, const std::string& model_dir) {
        const auto set = stt::load_word_models(model_dir);
        return transcript_to_dict(stt::recognize(stt::read_wav(wav_path), set));
      },
      py::arg("wav_path"), py::arg("model_dir"),
      "Score a WAV against a trained model directory; returns label, margin "
      "and the per-word score map.");

  m.def(
      "recognize_samples",
      [](const DoubleArray& samples, int sample_rate,
         const std::string& model_dir) {
        const auto set = stt::load_word_models(model_dir);
        return transcript_to_dict(
            stt::recognize(to_buffer(samples, sample_rate), set));
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("model_dir"),
      "recognize() for in-memory audio.");
}
