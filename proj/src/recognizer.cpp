#include "stt/recognizer.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace stt {

namespace {

constexpr const char* kWordsetFile = "wordset.json";

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string sanitize_label(const std::string& label) {
  std::string out;
  for (char c : label) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? "word" : out;
}

nlohmann::json feature_config_to_json(const FeatureConfig& c) {
  return {{"sample_rate_hz", c.sample_rate_hz},
          {"frame_ms", c.frame_ms},
          {"hop_ms", c.hop_ms},
          {"pre_emphasis_alpha", c.pre_emphasis_alpha},
          {"n_fft", c.n_fft},
          {"n_filters", c.n_filters},
          {"n_ceps", c.n_ceps},
          {"delta_window", c.delta_window},
          {"log_floor", c.log_floor},
          {"fmin_hz", c.fmin_hz},
          {"fmax_hz", c.fmax_hz},
          {"window", c.window == WindowKind::hamming ? "hamming" : "rectangular"}};
}

FeatureConfig feature_config_from_json(const nlohmann::json& j) {
  FeatureConfig c;
  c.sample_rate_hz = j.at("sample_rate_hz").get<int>();
  c.frame_ms = j.at("frame_ms").get<double>();
  c.hop_ms = j.at("hop_ms").get<double>();
  c.pre_emphasis_alpha = j.at("pre_emphasis_alpha").get<double>();
  c.n_fft = j.at("n_fft").get<int>();
  c.n_filters = j.at("n_filters").get<int>();
  c.n_ceps = j.at("n_ceps").get<int>();
  c.delta_window = j.at("delta_window").get<int>();
  c.log_floor = j.at("log_floor").get<double>();
  c.fmin_hz = j.at("fmin_hz").get<double>();
  c.fmax_hz = j.at("fmax_hz").get<double>();
  const auto window = j.at("window").get<std::string>();
  if (window == "hamming") {
    c.window = WindowKind::hamming;
  } else if (window == "rectangular") {
    c.window = WindowKind::rectangular;
  } else {
    throw std::runtime_error("unknown window kind '" + window + "'");
  }
  c.validate();
  return c;
}

}  // namespace

LabeledCorpus load_corpus_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) {
    throw std::runtime_error("load_corpus_manifest: cannot open " +
                             manifest_path.string());
  }
  const auto base = manifest_path.parent_path();
  LabeledCorpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
      throw std::runtime_error("load_corpus_manifest: malformed line " +
                               std::to_string(line_no) + " in " +
                               manifest_path.string() +
                               " (expected label<TAB>wav-path)");
    }
    const std::string label = line.substr(0, tab);
    std::filesystem::path wav = line.substr(tab + 1);
    if (wav.is_relative()) wav = base / wav;
    CorpusEntry entry;
    entry.label = label;
    entry.source = wav.string();
    entry.audio = read_wav(wav);
    corpus.entries.push_back(std::move(entry));
  }
  if (corpus.entries.empty()) {
    throw std::runtime_error("load_corpus_manifest: no entries in " +
                             manifest_path.string());
  }
  return corpus;
}

WordModelSet train_word_models(const LabeledCorpus& corpus,
                               const FeatureConfig& config,
                               const TrainConfig& train_config) {
  config.validate();
  if (corpus.entries.empty()) {
    throw std::invalid_argument("train_word_models: empty corpus");
  }
  if (train_config.n_states < 1) {
    throw std::invalid_argument("train_word_models: need at least one state");
  }

  // label -> feature matrices, in corpus order for determinism
  std::map<std::string, std::vector<Matrix>> by_label;
  for (const auto& entry : corpus.entries) {
    FeatureMatrix feats = extract_features(entry.audio, config);
    if (feats.rows.rows() < static_cast<std::size_t>(train_config.n_states)) {
      throw std::invalid_argument(
          "train_word_models: clip '" + entry.source + "' (label '" +
          entry.label + "') yields " + std::to_string(feats.rows.rows()) +
          " frames, fewer than " + std::to_string(train_config.n_states) +
          " states");
    }
    by_label[entry.label].push_back(std::move(feats.rows));
  }

  WordModelSet set;
  set.feature_config = config;
  set.train_config = train_config;
  for (auto& [label, sequences] : by_label) {
    HmmModel initial =
        init_model(train_config.n_states, sequences, Topology::left_to_right,
                   train_config.seed, train_config.variance_floor);
    BaumWelchResult trained = baum_welch(initial, sequences,
                                         train_config.max_iters, train_config.tol);
    WordTrainingInfo info;
    info.final_log_likelihood = trained.log_likelihood_trace.back();
    info.iterations = trained.iterations;
    info.clip_count = static_cast<int>(sequences.size());
    set.training_meta[label] = info;
    set.models[label] = std::move(trained.model);
  }
  return set;
}

double score(const FeatureMatrix& features, const HmmModel& model) {
  const auto t_len = features.rows.rows();
  if (t_len == 0) {
    throw std::invalid_argument("score: empty feature matrix");
  }
  return forward_log(model, features.rows).log_likelihood /
         static_cast<double>(t_len);
}

Transcript recognize(const AudioBuffer& audio, const WordModelSet& models) {
  if (models.models.empty()) {
    throw std::invalid_argument("recognize: empty model set");
  }
  const FeatureMatrix feats = extract_features(audio, models.feature_config);

  Transcript out;
  double best = -std::numeric_limits<double>::infinity();
  double second = -std::numeric_limits<double>::infinity();
  for (const auto& [label, model] : models.models) {
    const double s = score(feats, model);
    out.scores[label] = s;
    // map iteration is in lexicographic label order, so strictly-greater
    // keeps the smaller label on ties
    if (s > best) {
      second = best;
      best = s;
      out.label = label;
    } else if (s > second) {
      second = s;
    }
  }
  out.margin = models.models.size() > 1 ? best - second : 0.0;
  return out;
}

EvalResult evaluate(const WordModelSet& models, const LabeledCorpus& test_corpus) {
  if (test_corpus.entries.empty()) {
    throw std::invalid_argument("evaluate: empty test corpus");
  }
  EvalResult res;
  std::set<std::string> missing;
  for (const auto& entry : test_corpus.entries) {
    const Transcript t = recognize(entry.audio, models);
    res.total += 1;
    if (t.label == entry.label) res.correct += 1;
    res.confusion[entry.label][t.label] += 1;
    if (!models.models.count(entry.label)) missing.insert(entry.label);
  }
  for (const auto& label : missing) {
    res.notes.push_back("test label '" + label +
                        "' has no trained model; its clips can never be correct");
  }
  res.accuracy = static_cast<double>(res.correct) / res.total;
  return res;
}

void save_word_models(const std::filesystem::path& dir, const WordModelSet& set) {
  if (set.models.empty()) {
    throw std::invalid_argument("save_word_models: empty model set");
  }
  std::filesystem::create_directories(dir);

  nlohmann::json words = nlohmann::json::array();
  std::set<std::string> used_names;
  for (const auto& [label, model] : set.models) {
    std::string base = sanitize_label(label);
    std::string name = base + ".json";
    for (int i = 2; used_names.count(name); ++i) {
      name = base + "_" + std::to_string(i) + ".json";
    }
    used_names.insert(name);

    const std::string text = model_to_json(model);
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("save_word_models: cannot write " +
                               (dir / name).string());
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
      throw std::runtime_error("save_word_models: write failed: " +
                               (dir / name).string());
    }

    nlohmann::json w;
    w["label"] = label;
    w["file"] = name;
    w["hash"] = to_hex(fnv1a64(text));
    const auto meta = set.training_meta.find(label);
    if (meta != set.training_meta.end()) {
      w["final_log_likelihood"] = meta->second.final_log_likelihood;
      w["iterations"] = meta->second.iterations;
      w["clip_count"] = meta->second.clip_count;
    }
    words.push_back(std::move(w));
  }

  nlohmann::json doc;
  doc["feature_config"] = feature_config_to_json(set.feature_config);
  doc["train_config"] = {{"n_states", set.train_config.n_states},
                         {"max_iters", set.train_config.max_iters},
                         {"tol", set.train_config.tol},
                         {"seed", set.train_config.seed},
                         {"variance_floor", set.train_config.variance_floor}};
  doc["words"] = std::move(words);

  std::ofstream out(dir / kWordsetFile, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("save_word_models: cannot write " +
                             (dir / kWordsetFile).string());
  }
  const std::string text = doc.dump(2) + "\n";
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

WordModelSet load_word_models(const std::filesystem::path& dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(dir / kWordsetFile));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_word_models: bad wordset document: " +
                             std::string(e.what()));
  }
  try {
    WordModelSet set;
    set.feature_config = feature_config_from_json(doc.at("feature_config"));
    const auto& tc = doc.at("train_config");
    set.train_config.n_states = tc.at("n_states").get<int>();
    set.train_config.max_iters = tc.at("max_iters").get<int>();
    set.train_config.tol = tc.at("tol").get<double>();
    set.train_config.seed = tc.at("seed").get<std::uint64_t>();
    set.train_config.variance_floor = tc.at("variance_floor").get<double>();

    for (const auto& w : doc.at("words")) {
      const auto label = w.at("label").get<std::string>();
      const auto file = w.at("file").get<std::string>();
      const std::string text = read_file(dir / file);
      const std::string expected = w.at("hash").get<std::string>();
      if (to_hex(fnv1a64(text)) != expected) {
        throw std::runtime_error("load_word_models: hash mismatch for " +
                                 (dir / file).string() +
                                 " (model files edited or stale wordset.json)");
      }
      set.models[label] = model_from_json(text);
      if (w.contains("final_log_likelihood")) {
        WordTrainingInfo info;
        info.final_log_likelihood = w.at("final_log_likelihood").get<double>();
        info.iterations = w.at("iterations").get<int>();
        info.clip_count = w.at("clip_count").get<int>();
        set.training_meta[label] = info;
      }
    }
    if (set.models.empty()) {
      throw std::runtime_error("load_word_models: wordset has no words");
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_word_models: bad wordset document: " +
                             std::string(e.what()));
  }
}

}  // namespace stt
