#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "stt/audio.hpp"
#include "stt/hmm.hpp"
#include "stt/mfcc.hpp"

namespace stt {

struct CorpusEntry {
  std::string label;
  AudioBuffer audio;
  std::string source;  // file path or synthetic id, used in error messages
};

struct LabeledCorpus {
  std::vector<CorpusEntry> entries;
};

// Manifest format: one "label<TAB>wav-path" per line, UTF-8. Relative wav
// paths are resolved against the manifest's directory.
LabeledCorpus load_corpus_manifest(const std::filesystem::path& manifest_path);

struct TrainConfig {
  int n_states = 5;
  int max_iters = 20;
  double tol = 1e-3;
  std::uint64_t seed = 1;
  double variance_floor = kDefaultVarianceFloor;
};

struct WordTrainingInfo {
  double final_log_likelihood = 0.0;
  int iterations = 0;
  int clip_count = 0;
};

struct WordModelSet {
  std::map<std::string, HmmModel> models;  // label -> left-to-right Gaussian HMM
  FeatureConfig feature_config;
  TrainConfig train_config;
  std::map<std::string, WordTrainingInfo> training_meta;
};

// One model per distinct label: extract features, left-to-right init,
// Baum-Welch. Deterministic given the seed.
WordModelSet train_word_models(const LabeledCorpus& corpus,
                               const FeatureConfig& config,
                               const TrainConfig& train_config);

// Length-normalized log-likelihood: forward LL divided by frame count.
double score(const FeatureMatrix& features, const HmmModel& model);

struct Transcript {
  std::string label;
  std::map<std::string, double> scores;  // label -> normalized log-likelihood
  double margin = 0.0;                   // best minus second best; 0 if one model
};

// Scores the clip against every word model; argmax ties go to the
// lexicographically smaller label.
Transcript recognize(const AudioBuffer& audio, const WordModelSet& models);

struct EvalResult {
  double accuracy = 0.0;
  int total = 0;
  int correct = 0;
  // confusion[true_label][predicted_label] = count
  std::map<std::string, std::map<std::string, int>> confusion;
  std::vector<std::string> notes;  // e.g. test labels absent from the model set
};

EvalResult evaluate(const WordModelSet& models, const LabeledCorpus& test_corpus);

// Model directory: one JSON model file per word plus wordset.json carrying the
// feature/train config and a per-file FNV-1a hash checked at load.
void save_word_models(const std::filesystem::path& dir, const WordModelSet& set);
WordModelSet load_word_models(const std::filesystem::path& dir);

}  // namespace stt
