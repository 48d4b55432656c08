#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stt/recognizer.hpp"
#include "test_util.hpp"

namespace {

stt::AudioBuffer make_clip(double f0, std::uint64_t noise_seed,
                           double dur = 0.35) {
  stt::SignalSpec stack;
  stack.kind = stt::SignalKind::harmonic_stack;
  stack.f0_hz = f0;
  stack.duration_s = dur;
  stack.amplitude = 0.4;
  stack.n_harmonics = 5;
  stt::AudioBuffer clip = stt::synthesize(stack);

  stt::SignalSpec noise;
  noise.kind = stt::SignalKind::white_noise;
  noise.duration_s = dur;
  noise.amplitude = 0.03;
  noise.seed = noise_seed;
  const auto nbuf = stt::synthesize(noise);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    clip.samples[i] = std::clamp(clip.samples[i] + nbuf.samples[i], -1.0, 1.0);
  }
  return clip;
}

// Two spectrally disjoint classes, four training clips each.
stt::LabeledCorpus two_class_corpus() {
  stt::LabeledCorpus corpus;
  for (int i = 0; i < 4; ++i) {
    corpus.entries.push_back(
        {"lo", make_clip(150.0, static_cast<std::uint64_t>(i)), "lo_" + std::to_string(i)});
    corpus.entries.push_back(
        {"hi", make_clip(400.0, static_cast<std::uint64_t>(100 + i)), "hi_" + std::to_string(i)});
  }
  return corpus;
}

stt::TrainConfig quick_train() {
  stt::TrainConfig tc;
  tc.max_iters = 8;
  return tc;
}

}  // namespace

TEST_CASE("load_corpus_manifest resolves relative paths and validates lines") {
  tu::TempDir dir;
  stt::write_wav(dir / "a.wav", make_clip(150.0, 1));
  stt::write_wav(dir / "b.wav", make_clip(400.0, 2));
  tu::spit(dir / "train.tsv", "lo\ta.wav\nhi\tb.wav\n");

  const auto corpus = stt::load_corpus_manifest(dir / "train.tsv");
  REQUIRE(corpus.entries.size() == 2);
  CHECK(corpus.entries[0].label == "lo");
  CHECK(corpus.entries[1].label == "hi");
  CHECK(corpus.entries[0].audio.sample_rate_hz == 16000);

  tu::spit(dir / "bad.tsv", "lo\ta.wav\njust-one-field\n");
  CHECK(tu::expect_throw([&] { stt::load_corpus_manifest(dir / "bad.tsv"); },
                         "malformed line 2") == "");

  tu::spit(dir / "missing.tsv", "lo\tnot_there.wav\n");
  CHECK(tu::expect_throw([&] { stt::load_corpus_manifest(dir / "missing.tsv"); },
                         "not_there.wav") == "");

  tu::spit(dir / "empty.tsv", "\n\n");
  CHECK(tu::expect_throw([&] { stt::load_corpus_manifest(dir / "empty.tsv"); },
                         "no entries") == "");
}

TEST_CASE("train_word_models: per-label models, separability, determinism") {
  const auto corpus = two_class_corpus();
  stt::FeatureConfig config;
  const auto set = stt::train_word_models(corpus, config, quick_train());

  REQUIRE(set.models.size() == 2);
  REQUIRE(set.models.count("lo") == 1);
  REQUIRE(set.models.count("hi") == 1);
  CHECK(set.training_meta.at("lo").clip_count == 4);

  // own-class score strictly higher on a held-out clip
  const auto held_out = make_clip(150.0, 999);
  const auto feats = stt::extract_features(held_out, config);
  CHECK(stt::score(feats, set.models.at("lo")) >
        stt::score(feats, set.models.at("hi")));

  // identical seeds give bit-identical models
  const auto rerun = stt::train_word_models(corpus, config, quick_train());
  CHECK(stt::model_to_json(set.models.at("lo")) ==
        stt::model_to_json(rerun.models.at("lo")));
  CHECK(stt::model_to_json(set.models.at("hi")) ==
        stt::model_to_json(rerun.models.at("hi")));
}

TEST_CASE("train_word_models rejects clips shorter than the state count") {
  stt::LabeledCorpus corpus;
  corpus.entries.push_back({"w", make_clip(150.0, 1, 0.05), "tiny.wav"});
  stt::FeatureConfig config;
  const auto err = tu::expect_throw(
      [&] { stt::train_word_models(corpus, config, quick_train()); },
      "tiny.wav");
  CHECK(err == "");
  CHECK(tu::expect_throw(
            [&] { stt::train_word_models(corpus, config, quick_train()); },
            "fewer than 5 states") == "");
}

TEST_CASE("recognize: argmax, margins, tie-breaks, and the score map") {
  const auto corpus = two_class_corpus();
  stt::FeatureConfig config;
  const auto set = stt::train_word_models(corpus, config, quick_train());

  const auto t_lo = stt::recognize(make_clip(150.0, 500), set);
  CHECK(t_lo.label == "lo");
  const auto t_hi = stt::recognize(make_clip(400.0, 501), set);
  CHECK(t_hi.label == "hi");
  CHECK(t_lo.margin > 0.0);
  CHECK(t_lo.scores.size() == 2);
  CHECK(t_lo.scores.count("lo") == 1);
  CHECK(t_lo.scores.count("hi") == 1);

  // single-model set: that label, margin pinned to 0
  stt::WordModelSet single;
  single.feature_config = config;
  single.models["only"] = set.models.at("lo");
  const auto t_single = stt::recognize(make_clip(150.0, 502), single);
  CHECK(t_single.label == "only");
  CHECK(t_single.margin == 0.0);

  // two identical models: scores tie, lexicographically smaller label wins
  stt::WordModelSet tied;
  tied.feature_config = config;
  tied.models["beta"] = set.models.at("lo");
  tied.models["alpha"] = set.models.at("lo");
  const auto t_tie = stt::recognize(make_clip(150.0, 503), tied);
  CHECK(t_tie.label == "alpha");
  CHECK(t_tie.margin == 0.0);
  CHECK(t_tie.scores.at("alpha") == t_tie.scores.at("beta"));
}

TEST_CASE("waveform gain reaches only the log-energy feature") {
  // Cepstra see a constant log-spectral offset (zeroed by the DCT rows),
  // and deltas difference it away, so g*x shifts exactly one column of the
  // feature matrix: static log energy, by 2*ln(g).
  const auto clip = make_clip(150.0, 700);
  stt::FeatureConfig config;
  const auto base = stt::extract_features(clip, config);

  for (double gain : {0.5, 2.0}) {
    stt::AudioBuffer scaled = clip;
    for (auto& s : scaled.samples) s *= gain;  // stays within [-1, 1]
    const auto shifted = stt::extract_features(scaled, config);

    REQUIRE(shifted.rows.rows() == base.rows.rows());
    const std::size_t log_e = static_cast<std::size_t>(config.n_ceps);
    const double shift = 2.0 * std::log(gain);
    for (std::size_t t = 0; t < base.rows.rows(); ++t) {
      for (std::size_t d = 0; d < base.rows.cols(); ++d) {
        const double delta = shifted.rows(t, d) - base.rows(t, d);
        if (d == log_e) {
          CHECK(delta == doctest::Approx(shift).epsilon(1e-9));
        } else {
          CHECK(std::abs(delta) <= 1e-9);
        }
      }
    }
  }
}

TEST_CASE("recognize handles rescaled input without degenerate output") {
  const auto corpus = two_class_corpus();
  stt::FeatureConfig config;
  const auto set = stt::train_word_models(corpus, config, quick_train());

  // No argmax claim here; label stability under gain is a corpus-level
  // property checked end to end elsewhere. The scorer just has to stay
  // well-behaved on quieter/louder takes of a known word.
  for (double gain : {0.5, 2.0}) {
    stt::AudioBuffer scaled = make_clip(150.0, 700);
    for (auto& s : scaled.samples) s *= gain;
    const auto t = stt::recognize(scaled, set);
    CHECK(set.models.count(t.label) == 1);
    CHECK(t.scores.size() == 2);
    for (const auto& [label, value] : t.scores) {
      CHECK(std::isfinite(value));
    }
    CHECK(t.margin >= 0.0);
  }
}

TEST_CASE("evaluate: accuracy, confusion counts, and missing labels") {
  const auto corpus = two_class_corpus();
  stt::FeatureConfig config;
  const auto set = stt::train_word_models(corpus, config, quick_train());

  const auto self = stt::evaluate(set, corpus);
  CHECK(self.accuracy == 1.0);
  CHECK(self.total == 8);
  CHECK(self.correct == 8);
  int confusion_total = 0;
  for (const auto& [truth, row] : self.confusion) {
    for (const auto& [pred, count] : row) confusion_total += count;
  }
  CHECK(confusion_total == self.total);

  stt::LabeledCorpus stranger;
  stranger.entries.push_back({"zzz", make_clip(250.0, 1), "zzz_clip"});
  const auto res = stt::evaluate(set, stranger);
  CHECK(res.accuracy == 0.0);
  REQUIRE(res.notes.size() == 1);
  CHECK(tu::contains(res.notes[0], "zzz"));
}

TEST_CASE("word model persistence: round trip, config, and hash guard") {
  const auto corpus = two_class_corpus();
  stt::FeatureConfig config;
  config.n_ceps = 10;  // non-default value must survive the round trip
  const auto set = stt::train_word_models(corpus, config, quick_train());

  tu::TempDir dir;
  const auto model_dir = dir / "models";
  stt::save_word_models(model_dir, set);
  CHECK(tu::slurp(model_dir / "wordset.json") != "");
  CHECK(tu::slurp(model_dir / "lo.json") != "");
  CHECK(tu::slurp(model_dir / "hi.json") != "");

  const auto loaded = stt::load_word_models(model_dir);
  CHECK(loaded.feature_config.n_ceps == 10);
  CHECK(loaded.train_config.n_states == 5);
  REQUIRE(loaded.models.size() == 2);
  for (const auto& label : {"lo", "hi"}) {
    CHECK(stt::model_to_json(loaded.models.at(label)) ==
          stt::model_to_json(set.models.at(label)));
  }
  CHECK(loaded.training_meta.at("hi").clip_count == 4);

  // recognition through the loaded set matches the in-memory set
  const auto clip = make_clip(400.0, 900);
  CHECK(stt::recognize(clip, loaded).label == stt::recognize(clip, set).label);

  // tampering with a model file trips the hash check
  auto text = tu::slurp(model_dir / "lo.json");
  text.replace(text.find("left_to_right"), 13, "ergodic      ");
  tu::spit(model_dir / "lo.json", text);
  CHECK(tu::expect_throw([&] { stt::load_word_models(model_dir); },
                         "hash mismatch") == "");

  CHECK(tu::expect_throw([&] { stt::load_word_models(dir / "nowhere"); },
                         "cannot open") == "");
}
