#include "stt/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace stt {

namespace {

constexpr double kStochasticTol = 1e-9;

double checked_log(double p) { return p > 0.0 ? std::log(p) : kLogZero; }

void check_row_stochastic(std::span<const double> log_row, const char* what) {
  double sum = 0.0;
  for (double lv : log_row) {
    if (std::isnan(lv) || lv > 1e-12) {
      throw std::invalid_argument(std::string("HmmModel: invalid ") + what +
                                  " log-probability");
    }
    sum += std::exp(lv);
  }
  if (std::abs(sum - 1.0) > kStochasticTol) {
    throw std::invalid_argument(std::string("HmmModel: ") + what +
                                " row does not sum to 1 (sum=" +
                                std::to_string(sum) + ")");
  }
}

// Per-frame emission log-probabilities, T x S.
Matrix emission_log_probs(const HmmModel& model, const DiscreteSequence& obs) {
  const auto& em = model.discrete();
  Matrix out(obs.size(), static_cast<std::size_t>(model.n_states));
  for (std::size_t t = 0; t < obs.size(); ++t) {
    const int sym = obs[t];
    if (sym < 0 || sym >= em.n_symbols()) {
      throw std::invalid_argument("HMM: symbol index " + std::to_string(sym) +
                                  " out of range [0, " +
                                  std::to_string(em.n_symbols()) + ")");
    }
    for (int s = 0; s < model.n_states; ++s) {
      out(t, static_cast<std::size_t>(s)) =
          em.log_b(static_cast<std::size_t>(s), static_cast<std::size_t>(sym));
    }
  }
  return out;
}

Matrix emission_log_probs(const HmmModel& model, const Matrix& obs) {
  const auto& em = model.gaussian();
  if (obs.cols() != em.means.cols()) {
    throw std::invalid_argument(
        "HMM: observation dimension " + std::to_string(obs.cols()) +
        " does not match emission dimension " + std::to_string(em.means.cols()));
  }
  Matrix out(obs.rows(), static_cast<std::size_t>(model.n_states));
  for (std::size_t t = 0; t < obs.rows(); ++t) {
    for (int s = 0; s < model.n_states; ++s) {
      const auto su = static_cast<std::size_t>(s);
      out(t, su) = gaussian_log_pdf(em.means.row(su), em.variances.row(su),
                                    obs.row(t));
    }
  }
  return out;
}

ForwardResult forward_core(const HmmModel& model, const Matrix& log_b) {
  const std::size_t t_len = log_b.rows();
  const auto s_len = static_cast<std::size_t>(model.n_states);
  if (t_len == 0) {
    throw std::invalid_argument("forward_log: empty observation sequence");
  }
  ForwardResult res;
  res.log_alpha = Matrix(t_len, s_len, kLogZero);
  for (std::size_t s = 0; s < s_len; ++s) {
    res.log_alpha(0, s) = model.log_pi[s] + log_b(0, s);
  }
  std::vector<double> terms(s_len);
  for (std::size_t t = 1; t < t_len; ++t) {
    for (std::size_t s = 0; s < s_len; ++s) {
      for (std::size_t r = 0; r < s_len; ++r) {
        terms[r] = res.log_alpha(t - 1, r) + model.log_a(r, s);
      }
      res.log_alpha(t, s) = logsumexp(terms) + log_b(t, s);
    }
  }
  res.log_likelihood = logsumexp(res.log_alpha.row(t_len - 1));
  return res;
}

Matrix backward_core(const HmmModel& model, const Matrix& log_b) {
  const std::size_t t_len = log_b.rows();
  const auto s_len = static_cast<std::size_t>(model.n_states);
  if (t_len == 0) {
    throw std::invalid_argument("backward_log: empty observation sequence");
  }
  Matrix log_beta(t_len, s_len, 0.0);
  std::vector<double> terms(s_len);
  for (std::size_t t = t_len - 1; t-- > 0;) {
    for (std::size_t s = 0; s < s_len; ++s) {
      for (std::size_t r = 0; r < s_len; ++r) {
        terms[r] = model.log_a(s, r) + log_b(t + 1, r) + log_beta(t + 1, r);
      }
      log_beta(t, s) = logsumexp(terms);
    }
  }
  return log_beta;
}

ViterbiResult viterbi_core(const HmmModel& model, const Matrix& log_b) {
  const std::size_t t_len = log_b.rows();
  const auto s_len = static_cast<std::size_t>(model.n_states);
  if (t_len == 0) {
    throw std::invalid_argument("viterbi: empty observation sequence");
  }
  Matrix delta(t_len, s_len, kLogZero);
  std::vector<std::vector<int>> back(t_len, std::vector<int>(s_len, 0));
  for (std::size_t s = 0; s < s_len; ++s) {
    delta(0, s) = model.log_pi[s] + log_b(0, s);
  }
  for (std::size_t t = 1; t < t_len; ++t) {
    for (std::size_t s = 0; s < s_len; ++s) {
      double best = kLogZero;
      int best_r = 0;
      for (std::size_t r = 0; r < s_len; ++r) {
        // strictly greater keeps the lowest predecessor index on ties
        const double cand = delta(t - 1, r) + model.log_a(r, s);
        if (cand > best) {
          best = cand;
          best_r = static_cast<int>(r);
        }
      }
      delta(t, s) = best + log_b(t, s);
      back[t][s] = best_r;
    }
  }
  ViterbiResult res;
  double best = kLogZero;
  int best_s = 0;
  for (std::size_t s = 0; s < s_len; ++s) {
    if (delta(t_len - 1, s) > best) {
      best = delta(t_len - 1, s);
      best_s = static_cast<int>(s);
    }
  }
  res.log_prob = best;
  res.path.resize(t_len);
  res.path[t_len - 1] = best_s;
  for (std::size_t t = t_len - 1; t-- > 0;) {
    res.path[t] = back[t + 1][static_cast<std::size_t>(res.path[t + 1])];
  }
  return res;
}

void fill_uniform_structure(HmmModel& model, Topology topology) {
  const auto s_len = static_cast<std::size_t>(model.n_states);
  model.topology = topology;
  model.log_pi.assign(s_len, kLogZero);
  model.log_a = Matrix(s_len, s_len, kLogZero);
  if (topology == Topology::ergodic) {
    const double lp = std::log(1.0 / static_cast<double>(s_len));
    for (std::size_t s = 0; s < s_len; ++s) {
      model.log_pi[s] = lp;
      for (std::size_t r = 0; r < s_len; ++r) model.log_a(s, r) = lp;
    }
  } else {
    // Bakis: start in state 0, self-loop or advance by one.
    model.log_pi[0] = 0.0;
    for (std::size_t s = 0; s + 1 < s_len; ++s) {
      model.log_a(s, s) = std::log(0.5);
      model.log_a(s, s + 1) = std::log(0.5);
    }
    model.log_a(s_len - 1, s_len - 1) = 0.0;
  }
}

struct EStepStats {
  // shared chain statistics
  std::vector<double> pi_acc;
  Matrix a_num;               // expected transition counts
  std::vector<double> a_den;  // occupancy over t < T-1
  std::vector<double> occupancy;
  // discrete emissions
  Matrix symbol_counts;
  // Gaussian emissions
  Matrix weighted_sum;
  Matrix weighted_sq_sum;
  std::vector<double> weight_total;

  double total_log_likelihood = 0.0;
  std::size_t n_sequences = 0;
};

EStepStats make_stats(const HmmModel& model) {
  const auto s_len = static_cast<std::size_t>(model.n_states);
  EStepStats st;
  st.pi_acc.assign(s_len, 0.0);
  st.a_num = Matrix(s_len, s_len, 0.0);
  st.a_den.assign(s_len, 0.0);
  st.occupancy.assign(s_len, 0.0);
  if (model.is_discrete()) {
    st.symbol_counts =
        Matrix(s_len, static_cast<std::size_t>(model.discrete().n_symbols()), 0.0);
  } else {
    const auto dim = static_cast<std::size_t>(model.gaussian().dim());
    st.weighted_sum = Matrix(s_len, dim, 0.0);
    st.weighted_sq_sum = Matrix(s_len, dim, 0.0);
    st.weight_total.assign(s_len, 0.0);
  }
  return st;
}

// Accumulates one sequence's posteriors into st. Kept generic over emission
// type through the symbol/vector callbacks below.
void accumulate_chain(const HmmModel& model, const Matrix& log_b, EStepStats& st,
                      Matrix& gamma_out) {
  const std::size_t t_len = log_b.rows();
  const auto s_len = static_cast<std::size_t>(model.n_states);
  const auto fwd = forward_core(model, log_b);
  const auto log_beta = backward_core(model, log_b);
  const double ll = fwd.log_likelihood;
  st.total_log_likelihood += ll;
  st.n_sequences += 1;

  // alpha+beta-ll can poke above 0 by ~|ll|*eps; clamp so posteriors stay <= 1.
  gamma_out = Matrix(t_len, s_len, 0.0);
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t s = 0; s < s_len; ++s) {
      gamma_out(t, s) =
          std::exp(std::min(0.0, fwd.log_alpha(t, s) + log_beta(t, s) - ll));
    }
  }
  for (std::size_t s = 0; s < s_len; ++s) {
    st.pi_acc[s] += gamma_out(0, s);
    for (std::size_t t = 0; t < t_len; ++t) st.occupancy[s] += gamma_out(t, s);
  }
  for (std::size_t t = 0; t + 1 < t_len; ++t) {
    for (std::size_t i = 0; i < s_len; ++i) {
      st.a_den[i] += gamma_out(t, i);
      for (std::size_t j = 0; j < s_len; ++j) {
        if (model.log_a(i, j) == kLogZero) continue;
        const double xi = std::exp(
            std::min(0.0, fwd.log_alpha(t, i) + model.log_a(i, j) +
                              log_b(t + 1, j) + log_beta(t + 1, j) - ll));
        st.a_num(i, j) += xi;
      }
    }
  }
}

void mstep(const HmmModel& model, const EStepStats& st, HmmModel& updated,
           std::vector<int>& starved) {
  const auto s_len = static_cast<std::size_t>(model.n_states);
  updated = model;
  starved.clear();
  std::vector<bool> is_starved(s_len, false);
  for (std::size_t s = 0; s < s_len; ++s) {
    if (st.occupancy[s] <= 0.0) {
      is_starved[s] = true;
      starved.push_back(static_cast<int>(s));
    }
  }

  // The linear rows below sum to 1 in exact arithmetic; renormalizing scrubs
  // the floating-point drift so the model passes its own validation.
  double pi_sum = 0.0;
  for (std::size_t s = 0; s < s_len; ++s) pi_sum += st.pi_acc[s];
  for (std::size_t s = 0; s < s_len; ++s) {
    updated.log_pi[s] = checked_log(
        pi_sum > 0.0 ? st.pi_acc[s] / pi_sum
                     : st.pi_acc[s] / static_cast<double>(st.n_sequences));
  }
  for (std::size_t i = 0; i < s_len; ++i) {
    if (is_starved[i] || st.a_den[i] <= 0.0) continue;  // hold row fixed
    double row_sum = 0.0;
    for (std::size_t j = 0; j < s_len; ++j) {
      if (model.log_a(i, j) != kLogZero) row_sum += st.a_num(i, j);
    }
    if (row_sum <= 0.0) continue;
    for (std::size_t j = 0; j < s_len; ++j) {
      if (model.log_a(i, j) == kLogZero) continue;  // preserve topology zeros
      updated.log_a(i, j) = checked_log(st.a_num(i, j) / row_sum);
    }
  }

  if (model.is_discrete()) {
    auto em = model.discrete();
    for (std::size_t s = 0; s < s_len; ++s) {
      if (is_starved[s]) continue;
      double count_sum = 0.0;
      for (std::size_t v = 0; v < em.log_b.cols(); ++v) {
        count_sum += st.symbol_counts(s, v);
      }
      if (count_sum <= 0.0) continue;
      for (std::size_t v = 0; v < em.log_b.cols(); ++v) {
        em.log_b(s, v) = checked_log(st.symbol_counts(s, v) / count_sum);
      }
    }
    updated.emission = em;
  } else {
    auto em = model.gaussian();
    for (std::size_t s = 0; s < s_len; ++s) {
      if (is_starved[s] || st.weight_total[s] <= 0.0) continue;
      for (std::size_t d = 0; d < em.means.cols(); ++d) {
        const double mean = st.weighted_sum(s, d) / st.weight_total[s];
        const double var =
            st.weighted_sq_sum(s, d) / st.weight_total[s] - mean * mean;
        em.means(s, d) = mean;
        em.variances(s, d) = std::max(var, em.variance_floor);
      }
    }
    updated.emission = em;
  }
}

template <typename Sequence>
EStepStats run_estep(const HmmModel& model, const std::vector<Sequence>& seqs) {
  EStepStats st = make_stats(model);
  Matrix gamma;
  for (const auto& seq : seqs) {
    const Matrix log_b = emission_log_probs(model, seq);
    accumulate_chain(model, log_b, st, gamma);
    if constexpr (std::is_same_v<Sequence, DiscreteSequence>) {
      for (std::size_t t = 0; t < seq.size(); ++t) {
        for (std::size_t s = 0; s < gamma.cols(); ++s) {
          st.symbol_counts(s, static_cast<std::size_t>(seq[t])) += gamma(t, s);
        }
      }
    } else {
      for (std::size_t t = 0; t < seq.rows(); ++t) {
        for (std::size_t s = 0; s < gamma.cols(); ++s) {
          const double g = gamma(t, s);
          st.weight_total[s] += g;
          for (std::size_t d = 0; d < seq.cols(); ++d) {
            const double x = seq(t, d);
            st.weighted_sum(s, d) += g * x;
            st.weighted_sq_sum(s, d) += g * x * x;
          }
        }
      }
    }
  }
  return st;
}

template <typename Sequence>
BaumWelchResult baum_welch_impl(const HmmModel& initial,
                                const std::vector<Sequence>& seqs,
                                int max_iters, double tol) {
  if (seqs.empty()) {
    throw std::invalid_argument("baum_welch: no training sequences");
  }
  if (tol <= 0.0) {
    throw std::invalid_argument("baum_welch: tol must be positive");
  }
  if (max_iters < 1) {
    throw std::invalid_argument("baum_welch: max_iters must be >= 1");
  }
  initial.validate();

  BaumWelchResult res;
  res.model = initial;
  EStepStats st = run_estep(res.model, seqs);
  double ll_prev = st.total_log_likelihood;
  res.log_likelihood_trace.push_back(ll_prev);

  for (int iter = 0; iter < max_iters; ++iter) {
    HmmModel updated;
    mstep(res.model, st, updated, res.starved_states);
    res.model = std::move(updated);
    res.iterations = iter + 1;

    st = run_estep(res.model, seqs);
    const double ll_new = st.total_log_likelihood;
    res.log_likelihood_trace.push_back(ll_new);
    if (ll_new - ll_prev < tol) break;
    ll_prev = ll_new;
  }
  return res;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const std::size_t rows = j.size();
  if (rows == 0) return {};
  const std::size_t cols = j.at(0).size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j.at(r).size() != cols) {
      throw std::runtime_error("model_from_json: ragged matrix");
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

Matrix log_matrix(const Matrix& linear) {
  Matrix out(linear.rows(), linear.cols());
  for (std::size_t r = 0; r < linear.rows(); ++r) {
    for (std::size_t c = 0; c < linear.cols(); ++c) {
      out(r, c) = checked_log(linear(r, c));
    }
  }
  return out;
}

Matrix exp_matrix(const Matrix& logm) {
  Matrix out(logm.rows(), logm.cols());
  for (std::size_t r = 0; r < logm.rows(); ++r) {
    for (std::size_t c = 0; c < logm.cols(); ++c) {
      out(r, c) = std::exp(logm(r, c));
    }
  }
  return out;
}

}  // namespace

double logsumexp(std::span<const double> xs) {
  double m = kLogZero;
  for (double x : xs) m = std::max(m, x);
  if (m == kLogZero) return kLogZero;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

double gaussian_log_pdf(std::span<const double> mean,
                        std::span<const double> variance,
                        std::span<const double> x) {
  if (mean.size() != variance.size() || mean.size() != x.size()) {
    throw std::invalid_argument("gaussian_log_pdf: dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double diff = x[d] - mean[d];
    acc += std::log(2.0 * std::numbers::pi * variance[d]) +
           diff * diff / variance[d];
  }
  return -0.5 * acc;
}

void HmmModel::validate() const {
  const auto s_len = static_cast<std::size_t>(n_states);
  if (n_states < 1) {
    throw std::invalid_argument("HmmModel: need at least one state");
  }
  if (log_pi.size() != s_len || log_a.rows() != s_len || log_a.cols() != s_len) {
    throw std::invalid_argument("HmmModel: parameter dimensions inconsistent");
  }
  check_row_stochastic(log_pi, "initial");
  for (std::size_t s = 0; s < s_len; ++s) {
    check_row_stochastic(log_a.row(s), "transition");
  }
  if (topology == Topology::left_to_right) {
    for (std::size_t i = 0; i < s_len; ++i) {
      for (std::size_t j = 0; j < s_len; ++j) {
        if ((j < i || j > i + 1) && log_a(i, j) != kLogZero) {
          throw std::invalid_argument(
              "HmmModel: left_to_right topology allows only self-loops and "
              "single-step advances");
        }
      }
    }
  }
  if (is_discrete()) {
    const auto& em = discrete();
    if (em.log_b.rows() != s_len || em.log_b.cols() == 0) {
      throw std::invalid_argument("HmmModel: emission table dimensions inconsistent");
    }
    for (std::size_t s = 0; s < s_len; ++s) {
      check_row_stochastic(em.log_b.row(s), "emission");
    }
  } else {
    const auto& em = gaussian();
    if (em.means.rows() != s_len || em.variances.rows() != s_len ||
        em.means.cols() != em.variances.cols() || em.means.cols() == 0) {
      throw std::invalid_argument("HmmModel: Gaussian dimensions inconsistent");
    }
    if (em.variance_floor <= 0.0) {
      throw std::invalid_argument("HmmModel: variance floor must be positive");
    }
    for (std::size_t s = 0; s < s_len; ++s) {
      for (std::size_t d = 0; d < em.variances.cols(); ++d) {
        if (!(em.variances(s, d) >= em.variance_floor)) {
          throw std::invalid_argument(
              "HmmModel: variance below floor at state " + std::to_string(s) +
              " dim " + std::to_string(d));
        }
      }
    }
  }
}

HmmModel make_discrete_model(const std::vector<double>& pi, const Matrix& a,
                             const Matrix& b, Topology topology) {
  HmmModel model;
  model.n_states = static_cast<int>(pi.size());
  model.topology = topology;
  model.log_pi.resize(pi.size());
  for (std::size_t s = 0; s < pi.size(); ++s) model.log_pi[s] = checked_log(pi[s]);
  model.log_a = log_matrix(a);
  model.emission = DiscreteEmission{log_matrix(b)};
  model.validate();
  return model;
}

HmmModel make_gaussian_model(const std::vector<double>& pi, const Matrix& a,
                             const Matrix& means, const Matrix& variances,
                             Topology topology, double variance_floor) {
  HmmModel model;
  model.n_states = static_cast<int>(pi.size());
  model.topology = topology;
  model.log_pi.resize(pi.size());
  for (std::size_t s = 0; s < pi.size(); ++s) model.log_pi[s] = checked_log(pi[s]);
  model.log_a = log_matrix(a);
  model.emission = GaussianEmission{means, variances, variance_floor};
  model.validate();
  return model;
}

ForwardResult forward_log(const HmmModel& model, const DiscreteSequence& obs) {
  if (obs.empty()) {
    throw std::invalid_argument("forward_log: empty observation sequence");
  }
  return forward_core(model, emission_log_probs(model, obs));
}

ForwardResult forward_log(const HmmModel& model, const Matrix& obs) {
  if (obs.rows() == 0) {
    throw std::invalid_argument("forward_log: empty observation sequence");
  }
  return forward_core(model, emission_log_probs(model, obs));
}

Matrix backward_log(const HmmModel& model, const DiscreteSequence& obs) {
  if (obs.empty()) {
    throw std::invalid_argument("backward_log: empty observation sequence");
  }
  return backward_core(model, emission_log_probs(model, obs));
}

Matrix backward_log(const HmmModel& model, const Matrix& obs) {
  if (obs.rows() == 0) {
    throw std::invalid_argument("backward_log: empty observation sequence");
  }
  return backward_core(model, emission_log_probs(model, obs));
}

ViterbiResult viterbi(const HmmModel& model, const DiscreteSequence& obs) {
  if (obs.empty()) {
    throw std::invalid_argument("viterbi: empty observation sequence");
  }
  return viterbi_core(model, emission_log_probs(model, obs));
}

ViterbiResult viterbi(const HmmModel& model, const Matrix& obs) {
  if (obs.rows() == 0) {
    throw std::invalid_argument("viterbi: empty observation sequence");
  }
  return viterbi_core(model, emission_log_probs(model, obs));
}

HmmModel init_model(int n_states, const std::vector<DiscreteSequence>& sequences,
                    Topology topology, std::uint64_t seed) {
  if (n_states < 1) {
    throw std::invalid_argument("init_model: need at least one state");
  }
  if (sequences.empty()) {
    throw std::invalid_argument("init_model: need at least one sequence");
  }
  int n_symbols = 0;
  for (const auto& seq : sequences) {
    if (seq.empty()) {
      throw std::invalid_argument("init_model: empty sequence");
    }
    if (topology == Topology::left_to_right &&
        seq.size() < static_cast<std::size_t>(n_states)) {
      throw std::invalid_argument(
          "init_model: sequence of length " + std::to_string(seq.size()) +
          " shorter than " + std::to_string(n_states) + " states");
    }
    for (int sym : seq) {
      if (sym < 0) {
        throw std::invalid_argument("init_model: negative symbol index");
      }
      n_symbols = std::max(n_symbols, sym + 1);
    }
  }

  HmmModel model;
  model.n_states = n_states;
  fill_uniform_structure(model, topology);

  // uniform rows with small seeded jitter so EM can break symmetry
  std::mt19937_64 rng(seed);
  Matrix log_b(static_cast<std::size_t>(n_states),
               static_cast<std::size_t>(n_symbols));
  for (std::size_t s = 0; s < log_b.rows(); ++s) {
    double row_sum = 0.0;
    std::vector<double> row(log_b.cols());
    for (auto& v : row) {
      const double u =
          static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
      v = 1.0 + 0.01 * u;
      row_sum += v;
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      log_b(s, c) = std::log(row[c] / row_sum);
    }
  }
  model.emission = DiscreteEmission{std::move(log_b)};
  model.validate();
  return model;
}

HmmModel init_model(int n_states, const std::vector<Matrix>& sequences,
                    Topology topology, std::uint64_t seed,
                    double variance_floor) {
  (void)seed;  // the Gaussian path is deterministic; seed kept for symmetry
  if (n_states < 1) {
    throw std::invalid_argument("init_model: need at least one state");
  }
  if (sequences.empty()) {
    throw std::invalid_argument("init_model: need at least one sequence");
  }
  const std::size_t dim = sequences.front().cols();
  for (const auto& seq : sequences) {
    if (seq.rows() == 0 || seq.cols() != dim) {
      throw std::invalid_argument("init_model: empty or inconsistent sequence");
    }
    if (topology == Topology::left_to_right &&
        seq.rows() < static_cast<std::size_t>(n_states)) {
      throw std::invalid_argument(
          "init_model: sequence of length " + std::to_string(seq.rows()) +
          " shorter than " + std::to_string(n_states) + " states");
    }
  }

  HmmModel model;
  model.n_states = n_states;
  fill_uniform_structure(model, topology);

  // uniform segmentation: chunk s of every sequence feeds state s
  const auto s_len = static_cast<std::size_t>(n_states);
  Matrix sums(s_len, dim, 0.0);
  Matrix sq_sums(s_len, dim, 0.0);
  std::vector<double> counts(s_len, 0.0);
  for (const auto& seq : sequences) {
    const std::size_t t_len = seq.rows();
    for (std::size_t s = 0; s < s_len; ++s) {
      const std::size_t begin = s * t_len / s_len;
      const std::size_t end = (s + 1) * t_len / s_len;
      for (std::size_t t = begin; t < end; ++t) {
        counts[s] += 1.0;
        for (std::size_t d = 0; d < dim; ++d) {
          sums(s, d) += seq(t, d);
          sq_sums(s, d) += seq(t, d) * seq(t, d);
        }
      }
    }
  }
  Matrix means(s_len, dim, 0.0);
  Matrix variances(s_len, dim, variance_floor);
  for (std::size_t s = 0; s < s_len; ++s) {
    if (counts[s] <= 0.0) continue;
    for (std::size_t d = 0; d < dim; ++d) {
      const double mean = sums(s, d) / counts[s];
      means(s, d) = mean;
      variances(s, d) =
          std::max(sq_sums(s, d) / counts[s] - mean * mean, variance_floor);
    }
  }
  model.emission = GaussianEmission{std::move(means), std::move(variances),
                                    variance_floor};
  model.validate();
  return model;
}

BaumWelchResult baum_welch(const HmmModel& model,
                           const std::vector<DiscreteSequence>& sequences,
                           int max_iters, double tol) {
  return baum_welch_impl(model, sequences, max_iters, tol);
}

BaumWelchResult baum_welch(const HmmModel& model,
                           const std::vector<Matrix>& sequences, int max_iters,
                           double tol) {
  return baum_welch_impl(model, sequences, max_iters, tol);
}

std::string model_to_json(const HmmModel& model) {
  model.validate();
  nlohmann::json j;
  j["n_states"] = model.n_states;
  j["topology"] =
      model.topology == Topology::left_to_right ? "left_to_right" : "ergodic";
  nlohmann::json pi = nlohmann::json::array();
  for (double lp : model.log_pi) pi.push_back(std::exp(lp));
  j["initial"] = std::move(pi);
  j["transition"] = matrix_to_json(exp_matrix(model.log_a));
  if (model.is_discrete()) {
    j["emission"] = {{"type", "discrete"},
                     {"probs", matrix_to_json(exp_matrix(model.discrete().log_b))}};
  } else {
    const auto& em = model.gaussian();
    j["emission"] = {{"type", "gaussian"},
                     {"means", matrix_to_json(em.means)},
                     {"variances", matrix_to_json(em.variances)},
                     {"variance_floor", em.variance_floor}};
  }
  return j.dump(2) + "\n";
}

HmmModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("model_from_json: parse error: ") +
                             e.what());
  }
  try {
    HmmModel model;
    model.n_states = j.at("n_states").get<int>();
    const auto topo = j.at("topology").get<std::string>();
    if (topo == "left_to_right") {
      model.topology = Topology::left_to_right;
    } else if (topo == "ergodic") {
      model.topology = Topology::ergodic;
    } else {
      throw std::runtime_error("model_from_json: unknown topology '" + topo + "'");
    }
    for (const auto& v : j.at("initial")) {
      model.log_pi.push_back(checked_log(v.get<double>()));
    }
    model.log_a = log_matrix(matrix_from_json(j.at("transition")));
    const auto& em = j.at("emission");
    const auto type = em.at("type").get<std::string>();
    if (type == "discrete") {
      model.emission =
          DiscreteEmission{log_matrix(matrix_from_json(em.at("probs")))};
    } else if (type == "gaussian") {
      model.emission = GaussianEmission{
          matrix_from_json(em.at("means")), matrix_from_json(em.at("variances")),
          em.at("variance_floor").get<double>()};
    } else {
      throw std::runtime_error("model_from_json: unknown emission type '" +
                               type + "'");
    }
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("model_from_json: bad document: ") +
                             e.what());
  }
}

void save_model(const std::filesystem::path& path, const HmmModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("save_model: cannot open " + path.string());
  }
  const std::string text = model_to_json(model);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) {
    throw std::runtime_error("save_model: write failed: " + path.string());
  }
}

HmmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("load_model: cannot open " + path.string());
  }
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return model_from_json(text);
}

}  // namespace stt
