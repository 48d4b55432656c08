// stt: speech-to-text toolkit command line.
// Subcommands: features | train | recognize | pitch | synth

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "stt/audio.hpp"
#include "stt/dsp.hpp"
#include "stt/mfcc.hpp"
#include "stt/pitch.hpp"
#include "stt/recognizer.hpp"

namespace {

namespace fs = std::filesystem;

struct FeatureFlags {
  stt::FeatureConfig config;
  std::string window = "hamming";

  void bind(CLI::App* cmd) {
    cmd->add_option("--sr", config.sample_rate_hz, "Sample rate in Hz")
        ->capture_default_str();
    cmd->add_option("--frame-ms", config.frame_ms, "Frame length in ms")
        ->capture_default_str();
    cmd->add_option("--hop-ms", config.hop_ms, "Hop (frame shift) in ms")
        ->capture_default_str();
    cmd->add_option("--alpha", config.pre_emphasis_alpha,
                    "Pre-emphasis coefficient")
        ->capture_default_str();
    cmd->add_option("--n-fft", config.n_fft,
                    "FFT size (0 = smallest power of two >= frame length)")
        ->capture_default_str();
    cmd->add_option("--filters", config.n_filters, "Number of Mel filters")
        ->capture_default_str();
    cmd->add_option("--ceps", config.n_ceps, "Number of cepstral coefficients")
        ->capture_default_str();
    cmd->add_option("--delta-window", config.delta_window,
                    "Delta regression half-window in frames")
        ->capture_default_str();
    cmd->add_option("--log-floor", config.log_floor, "Energy floor before log")
        ->capture_default_str();
    cmd->add_option("--fmin", config.fmin_hz, "Filterbank low edge in Hz")
        ->capture_default_str();
    cmd->add_option("--fmax", config.fmax_hz,
                    "Filterbank high edge in Hz (0 = Nyquist)")
        ->capture_default_str();
    cmd->add_option("--window", window, "Analysis window")
        ->check(CLI::IsMember({"hamming", "rectangular"}))
        ->capture_default_str();
  }

  stt::FeatureConfig resolve() {
    config.window = window == "rectangular" ? stt::WindowKind::rectangular
                                            : stt::WindowKind::hamming;
    config.validate();
    return config;
  }
};

std::string trim(const std::string& s) {
  const char* ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

// Expands `--config <file>` into the equivalent --key value tokens before
// parsing, so every value still passes through the normal flag validation.
// Keys whose flag already appears on the command line are skipped: explicit
// flags beat the file, the file beats defaults.
std::vector<std::string> expand_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    }
  }
  if (config_path.empty()) return args;

  std::set<std::string> given;
  for (const auto& a : args) {
    if (a.rfind("--", 0) == 0) given.insert(a.substr(0, a.find('=')));
  }

  std::ifstream in(config_path);
  if (!in) {
    throw std::runtime_error("cannot open config file: " + config_path);
  }
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string key = eq == std::string::npos ? "" : trim(line.substr(0, eq));
    const std::string value = eq == std::string::npos ? "" : trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::runtime_error("config file line " + std::to_string(line_no) +
                               ": expected key = value");
    }
    if (given.count("--" + key) > 0) continue;
    args.push_back("--" + key);
    args.push_back(value);
  }
  return args;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open output file: " + path.string());
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

int run_features(const std::string& input, const std::string& output,
                 FeatureFlags& flags) {
  const stt::FeatureConfig config = flags.resolve();
  const stt::AudioBuffer audio = stt::read_wav(input);
  const stt::FeatureMatrix feats = stt::extract_features(audio, config);
  write_text_file(output, stt::feature_csv(feats));
  std::cerr << "features: " << feats.rows.rows() << " frames x "
            << feats.rows.cols() << " dims -> " << output << "\n";
  return 0;
}

int run_train(const std::string& manifest, const std::string& out_dir,
              FeatureFlags& flags, const stt::TrainConfig& train_config) {
  const stt::FeatureConfig config = flags.resolve();
  const stt::LabeledCorpus corpus = stt::load_corpus_manifest(manifest);
  const stt::WordModelSet set =
      stt::train_word_models(corpus, config, train_config);

  for (const auto& [label, info] : set.training_meta) {
    if (info.clip_count < 2) {
      std::cerr << "warning: label '" << label << "' has only "
                << info.clip_count << " clip; at least 2 are recommended\n";
    }
  }
  std::cerr << "word        clips  iters  final-logL\n";
  for (const auto& [label, info] : set.training_meta) {
    std::fprintf(stderr, "%-12s %4d  %5d  %.6f\n", label.c_str(),
                 info.clip_count, info.iterations, info.final_log_likelihood);
  }
  stt::save_word_models(out_dir, set);
  std::cerr << "train: wrote " << set.models.size() << " word models to "
            << out_dir << "\n";
  return 0;
}

int run_recognize(const std::string& input, const std::string& model_dir,
                  bool as_json, double min_margin, bool has_min_margin) {
  const stt::WordModelSet set = stt::load_word_models(model_dir);
  const stt::AudioBuffer audio = stt::read_wav(input);
  const stt::Transcript t = stt::recognize(audio, set);

  const bool low_confidence =
      has_min_margin && set.models.size() > 1 && t.margin < min_margin;
  const std::string label = low_confidence ? "<unk>" : t.label;

  if (as_json) {
    nlohmann::json j;
    j["label"] = label;
    j["best"] = t.label;
    j["margin"] = t.margin;
    j["scores"] = t.scores;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << label << "\n";
  }
  return 0;
}

int run_pitch(const std::string& input, const std::string& output,
              const std::string& method, const stt::PitchParams& params) {
  const stt::AudioBuffer audio = stt::read_wav(input);
  const stt::PitchTrack track = method == "peakpick"
                                    ? stt::estimate_f0_peakpick(audio, params)
                                    : stt::estimate_f0_xcorr(audio, params);
  write_text_file(output, stt::pitch_csv(track));
  std::size_t voiced = 0;
  for (const auto& f : track.frames) voiced += f.voiced ? 1 : 0;
  std::cerr << "pitch: " << track.frames.size() << " frames, " << voiced
            << " voiced -> " << output << "\n";
  return 0;
}

stt::SignalKind parse_kind(const std::string& name) {
  if (name == "sine") return stt::SignalKind::sine;
  if (name == "harmonic_stack") return stt::SignalKind::harmonic_stack;
  if (name == "white_noise") return stt::SignalKind::white_noise;
  throw std::runtime_error("unknown signal kind: " + name);
}

stt::AudioBuffer make_corpus_tone(double f0, double dur, double amp,
                                  int harmonics, int sr) {
  stt::SignalSpec stack;
  stack.kind = stt::SignalKind::harmonic_stack;
  stack.f0_hz = f0;
  stack.duration_s = dur;
  stack.amplitude = amp;
  stack.n_harmonics = harmonics;
  stack.sample_rate_hz = sr;
  return stt::synthesize(stack);
}

// Level as the recognition front end hears it: RMS after the standard
// pre-emphasis filter. Raw peaks ignore how strongly pre-emphasis favors
// high fundamentals, which would let clip loudness leak the class label.
double emphasized_rms(const stt::AudioBuffer& tone) {
  const auto y = stt::pre_emphasize(tone.samples, 0.97);
  double energy = 0.0;
  for (double v : y) energy += v * v;
  return std::sqrt(energy / static_cast<double>(y.size()));
}

stt::AudioBuffer make_corpus_clip(double f0, double dur, double amp,
                                  double tone_gain, double noise_amp,
                                  int harmonics, std::uint64_t clip_seed,
                                  int sr) {
  stt::AudioBuffer clip = make_corpus_tone(f0, dur, amp, harmonics, sr);
  for (auto& s : clip.samples) s *= tone_gain;

  if (noise_amp > 0.0) {
    stt::SignalSpec noise;
    noise.kind = stt::SignalKind::white_noise;
    noise.duration_s = dur;
    noise.amplitude = noise_amp;
    noise.seed = clip_seed;
    noise.sample_rate_hz = sr;
    const stt::AudioBuffer nbuf = stt::synthesize(noise);
    for (std::size_t i = 0; i < clip.samples.size(); ++i) {
      clip.samples[i] =
          std::clamp(clip.samples[i] + nbuf.samples[i], -1.0, 1.0);
    }
  }
  return clip;
}

struct CorpusFlags {
  std::string f0_list = "110,180,250,330,420";
  int train_per_class = 10;
  int test_per_class = 2;
  double dur = 0.5;
  double amp = 0.45;
  double noise_amp = 0.05;
  int harmonics = 5;
};

int run_synth_corpus(const std::string& out_dir, const CorpusFlags& cf,
                     std::uint64_t seed, int sr) {
  std::vector<double> f0s;
  std::stringstream ss(cf.f0_list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) f0s.push_back(std::stod(item));
  }
  if (f0s.empty()) {
    throw std::runtime_error("synth: --f0-list is empty");
  }

  // Equalize tone levels to the quietest class (post pre-emphasis) so that
  // energy features say nothing about the label; gains never exceed 1, so
  // clips stay inside [-1, 1] headroom even when a consumer rescales them.
  std::vector<double> tone_gains(f0s.size(), 1.0);
  double target = 0.0;
  for (std::size_t c = 0; c < f0s.size(); ++c) {
    const double level = emphasized_rms(
        make_corpus_tone(f0s[c], cf.dur, cf.amp, cf.harmonics, sr));
    tone_gains[c] = level;
    target = c == 0 ? level : std::min(target, level);
  }
  for (auto& g : tone_gains) g = target / g;

  const fs::path root(out_dir);
  fs::create_directories(root / "wavs");
  std::string train_manifest, test_manifest;

  for (std::size_t c = 0; c < f0s.size(); ++c) {
    const std::string label = "w" + std::to_string(static_cast<int>(f0s[c]));
    const int total = cf.train_per_class + cf.test_per_class;
    for (int i = 0; i < total; ++i) {
      const std::uint64_t clip_seed =
          seed * 1000003ULL + c * 1009ULL + static_cast<std::uint64_t>(i);
      const stt::AudioBuffer clip =
          make_corpus_clip(f0s[c], cf.dur, cf.amp, tone_gains[c],
                           cf.noise_amp, cf.harmonics, clip_seed, sr);
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%02d.wav", label.c_str(), i);
      stt::write_wav(root / "wavs" / name, clip);
      const std::string line = label + "\t" + "wavs/" + name + "\n";
      if (i < cf.train_per_class) {
        train_manifest += line;
      } else {
        test_manifest += line;
      }
    }
  }
  write_text_file(root / "train.tsv", train_manifest);
  write_text_file(root / "test.tsv", test_manifest);
  std::cerr << "synth: corpus with " << f0s.size() << " classes ("
            << cf.train_per_class << " train + " << cf.test_per_class
            << " test clips each) under " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stt: MFCC + HMM speech toolkit"};
  app.require_subcommand(1);

  // --- features ---
  std::string feat_in, feat_out;
  FeatureFlags feat_flags;
  auto* features = app.add_subcommand(
      "features", "Extract MFCC features from a WAV file into CSV");
  features->add_option("input", feat_in, "Input WAV file")->required();
  features->add_option("output", feat_out, "Output CSV file")->required();
  feat_flags.bind(features);
  std::string feat_config;
  features->add_option("--config", feat_config,
                       "Flat key = value config file (flags win)");

  // --- train ---
  std::string train_manifest, train_out;
  FeatureFlags train_flags;
  stt::TrainConfig train_config;
  auto* train = app.add_subcommand(
      "train", "Train one HMM per word from a label<TAB>wav manifest");
  train->add_option("manifest", train_manifest, "Corpus manifest file")
      ->required();
  train->add_option("outdir", train_out, "Output model directory")->required();
  train_flags.bind(train);
  train->add_option("--states", train_config.n_states, "HMM states per word")
      ->capture_default_str();
  train->add_option("--iters", train_config.max_iters, "Max EM iterations")
      ->capture_default_str();
  train->add_option("--tol", train_config.tol, "EM stopping tolerance")
      ->capture_default_str();
  train->add_option("--seed", train_config.seed, "Training seed")
      ->capture_default_str();
  train->add_option("--var-floor", train_config.variance_floor,
                    "Gaussian variance floor")
      ->capture_default_str();
  std::string train_config_file;
  train->add_option("--config", train_config_file,
                    "Flat key = value config file (flags win)");

  // --- recognize ---
  std::string rec_in, rec_models;
  bool rec_json = false;
  double rec_min_margin = 0.0;
  auto* recognize = app.add_subcommand(
      "recognize", "Recognize a WAV file against a trained model directory");
  recognize->add_option("input", rec_in, "Input WAV file")->required();
  recognize->add_option("modeldir", rec_models, "Model directory")->required();
  recognize->add_flag("--json", rec_json, "Emit the full score map as JSON");
  auto* margin_opt = recognize->add_option(
      "--min-margin", rec_min_margin,
      "Mark output as <unk> when the score margin falls below this");

  // --- pitch ---
  std::string pitch_in, pitch_out, pitch_method = "xcorr";
  stt::PitchParams pitch_params;
  auto* pitch = app.add_subcommand(
      "pitch", "Estimate a fundamental-frequency track into CSV");
  pitch->add_option("input", pitch_in, "Input WAV file")->required();
  pitch->add_option("output", pitch_out, "Output CSV file")->required();
  pitch->add_option("--method", pitch_method, "Estimation method")
      ->check(CLI::IsMember({"xcorr", "peakpick"}))
      ->capture_default_str();
  pitch->add_option("--frame-ms", pitch_params.frame_ms, "Frame length in ms")
      ->capture_default_str();
  pitch->add_option("--hop-ms", pitch_params.hop_ms, "Hop in ms")
      ->capture_default_str();
  pitch->add_option("--f0-min", pitch_params.f0_min_hz, "Search band low edge")
      ->capture_default_str();
  pitch->add_option("--f0-max", pitch_params.f0_max_hz, "Search band high edge")
      ->capture_default_str();
  pitch->add_option("--voicing-threshold", pitch_params.voicing_threshold,
                    "Minimum peak correlation for a voiced frame")
      ->capture_default_str();

  // --- synth ---
  std::string synth_out, synth_kind = "sine";
  bool synth_corpus = false;
  stt::SignalSpec synth_spec;
  CorpusFlags corpus_flags;
  std::uint64_t synth_seed = 1234;
  int synth_sr = 16000;
  auto* synth = app.add_subcommand(
      "synth", "Synthesize a test WAV, or a labeled corpus with --corpus");
  synth->add_option("output", synth_out,
                    "Output WAV file (or corpus directory with --corpus)")
      ->required();
  synth->add_flag("--corpus", synth_corpus,
                  "Emit an N-class corpus tree with train/test manifests");
  synth->add_option("--kind", synth_kind, "Signal kind")
      ->check(CLI::IsMember({"sine", "harmonic_stack", "white_noise"}))
      ->capture_default_str();
  synth->add_option("--f0", synth_spec.f0_hz, "Fundamental frequency in Hz")
      ->capture_default_str();
  auto* dur_opt =
      synth->add_option("--dur", synth_spec.duration_s, "Duration in seconds")
          ->capture_default_str();
  auto* amp_opt =
      synth->add_option("--amp", synth_spec.amplitude, "Peak amplitude in [0, 1]")
          ->capture_default_str();
  synth->add_option("--harmonics", synth_spec.n_harmonics,
                    "Harmonics in a harmonic_stack")
      ->capture_default_str();
  synth->add_option("--seed", synth_seed, "Seed for noise / corpus generation")
      ->capture_default_str();
  synth->add_option("--sr", synth_sr, "Sample rate in Hz")->capture_default_str();
  synth->add_option("--f0-list", corpus_flags.f0_list,
                    "Corpus mode: comma-separated class fundamentals")
      ->capture_default_str();
  synth->add_option("--train-per-class", corpus_flags.train_per_class,
                    "Corpus mode: training clips per class")
      ->capture_default_str();
  synth->add_option("--test-per-class", corpus_flags.test_per_class,
                    "Corpus mode: held-out clips per class")
      ->capture_default_str();
  synth->add_option("--noise-amp", corpus_flags.noise_amp,
                    "Corpus mode: added white-noise amplitude")
      ->capture_default_str();

  std::vector<std::string> args;
  try {
    args = expand_config_args(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  try {
    std::reverse(args.begin(), args.end());  // App::parse takes reversed args
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (features->parsed()) {
      return run_features(feat_in, feat_out, feat_flags);
    }
    if (train->parsed()) {
      return run_train(train_manifest, train_out, train_flags, train_config);
    }
    if (recognize->parsed()) {
      return run_recognize(rec_in, rec_models, rec_json, rec_min_margin,
                           margin_opt->count() > 0);
    }
    if (pitch->parsed()) {
      return run_pitch(pitch_in, pitch_out, pitch_method, pitch_params);
    }
    if (synth->parsed()) {
      if (synth_corpus) {
        // Corpus clips default to 0.5 s at 0.45 peak so that doubled gain
        // plus noise still fits in [-1, 1].
        if (dur_opt->count() > 0) corpus_flags.dur = synth_spec.duration_s;
        if (amp_opt->count() > 0) corpus_flags.amp = synth_spec.amplitude;
        corpus_flags.harmonics = synth_spec.n_harmonics;
        return run_synth_corpus(synth_out, corpus_flags, synth_seed, synth_sr);
      }
      synth_spec.kind = parse_kind(synth_kind);
      synth_spec.seed = synth_seed;
      synth_spec.sample_rate_hz = synth_sr;
      stt::write_wav(synth_out, stt::synthesize(synth_spec));
      std::cerr << "synth: wrote " << synth_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
