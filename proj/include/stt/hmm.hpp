#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "stt/matrix.hpp"

namespace stt {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();
inline constexpr double kDefaultVarianceFloor = 1e-3;

// log(sum(exp(xs))); all -inf yields -inf.
double logsumexp(std::span<const double> xs);

// Diagonal-Gaussian log density:
// -0.5 * sum_d [ ln(2*pi*var_d) + (x_d - mean_d)^2 / var_d ]
double gaussian_log_pdf(std::span<const double> mean,
                        std::span<const double> variance,
                        std::span<const double> x);

enum class Topology { ergodic, left_to_right };

struct DiscreteEmission {
  Matrix log_b;  // S x V, rows sum to 1 in linear domain
  int n_symbols() const { return static_cast<int>(log_b.cols()); }
};

struct GaussianEmission {
  Matrix means;      // S x D
  Matrix variances;  // S x D, every entry >= variance_floor
  double variance_floor = kDefaultVarianceFloor;
  int dim() const { return static_cast<int>(means.cols()); }
};

// All probability parameters live in log domain; -inf marks structural zeros.
struct HmmModel {
  int n_states = 0;
  std::vector<double> log_pi;
  Matrix log_a;  // S x S
  std::variant<DiscreteEmission, GaussianEmission> emission;
  Topology topology = Topology::ergodic;

  bool is_discrete() const {
    return std::holds_alternative<DiscreteEmission>(emission);
  }
  const DiscreteEmission& discrete() const {
    return std::get<DiscreteEmission>(emission);
  }
  const GaussianEmission& gaussian() const {
    return std::get<GaussianEmission>(emission);
  }

  // Checks stochasticity (1e-9), variance floor, and topology structure;
  // throws std::invalid_argument on violation.
  void validate() const;
};

// Constructors from linear-domain parameters; both validate.
HmmModel make_discrete_model(const std::vector<double>& pi, const Matrix& a,
                             const Matrix& b,
                             Topology topology = Topology::ergodic);
HmmModel make_gaussian_model(const std::vector<double>& pi, const Matrix& a,
                             const Matrix& means, const Matrix& variances,
                             Topology topology = Topology::ergodic,
                             double variance_floor = kDefaultVarianceFloor);

// Observation sequences: symbol indices for discrete models, T x D real
// matrices for Gaussian models.
using DiscreteSequence = std::vector<int>;

struct ForwardResult {
  double log_likelihood = 0.0;
  Matrix log_alpha;  // T x S
};

ForwardResult forward_log(const HmmModel& model, const DiscreteSequence& obs);
ForwardResult forward_log(const HmmModel& model, const Matrix& obs);

Matrix backward_log(const HmmModel& model, const DiscreteSequence& obs);
Matrix backward_log(const HmmModel& model, const Matrix& obs);

struct ViterbiResult {
  double log_prob = 0.0;
  std::vector<int> path;  // ties broken toward the lowest state index
};

ViterbiResult viterbi(const HmmModel& model, const DiscreteSequence& obs);
ViterbiResult viterbi(const HmmModel& model, const Matrix& obs);

// Initialization for Baum-Welch. Gaussian: uniform segmentation, chunk stats
// pooled over sequences, variances floored. Discrete: uniform emission rows
// plus seeded jitter, renormalized. pi/A are uniform over the transitions the
// topology allows (left_to_right starts in state 0, self-loop or advance by 1).
HmmModel init_model(int n_states, const std::vector<DiscreteSequence>& sequences,
                    Topology topology, std::uint64_t seed);
HmmModel init_model(int n_states, const std::vector<Matrix>& sequences,
                    Topology topology, std::uint64_t seed,
                    double variance_floor = kDefaultVarianceFloor);

struct BaumWelchResult {
  HmmModel model;
  std::vector<double> log_likelihood_trace;  // initial LL then one per update
  int iterations = 0;                        // number of parameter updates
  std::vector<int> starved_states;           // zero-occupancy states, held fixed
};

BaumWelchResult baum_welch(const HmmModel& model,
                           const std::vector<DiscreteSequence>& sequences,
                           int max_iters, double tol);
BaumWelchResult baum_welch(const HmmModel& model,
                           const std::vector<Matrix>& sequences, int max_iters,
                           double tol);

// Persistence: JSON document holding dimensions, topology and all parameter
// arrays in linear probability form; log conversion happens at load.
std::string model_to_json(const HmmModel& model);
HmmModel model_from_json(const std::string& text);
void save_model(const std::filesystem::path& path, const HmmModel& model);
HmmModel load_model(const std::filesystem::path& path);

}  // namespace stt
