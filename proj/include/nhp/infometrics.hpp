#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nhp/bigcount.hpp"
#include "nhp/oracle.hpp"
#include "nhp/random.hpp"

namespace nhp {

/// Posterior summary under a uniform prior on the support. Every quantity is a function of
/// the fiber-size histogram alone.
struct PosteriorStats {
  std::vector<std::uint64_t> fiber_sizes;  // k_y, one per image value
  std::uint64_t support_size = 0;          // N
  std::uint64_t image_size = 0;
  double conditional_entropy = 0.0;        // H(X|Y), bits
  double min_entropy_worst = 0.0;          // log2 min_y k_y
  double min_entropy_average = 0.0;        // -log2 P_guess
  double p_guess = 0.0;                    // |image| / N
};

PosteriorStats posterior_stats(std::span<const std::uint64_t> fiber_sizes);
PosteriorStats posterior_stats(const FiberTable& table);

/// sum_y (k_y / N) log2 k_y. Throws InvalidParameters for an empty table.
double conditional_entropy(const FiberTable& table);
double conditional_entropy(std::span<const std::uint64_t> fiber_sizes);

/// Non-uniform prior: sum_y W(y) H(X | Y = y) with W(y) the prior mass of the fiber.
/// `prior` is indexed by support index and must sum to 1.
double conditional_entropy(const FiberTable& table, std::span<const double> prior);

/// The distribution sample_object induces on the table's support, by support index.
/// Uniform when noise is disabled.
std::vector<double> generator_prior(const FiberTable& table);

/// Success of a uniform pick inside the fiber of Y: sum_y W(y) / k_y. Equals |image| / N
/// under the uniform prior.
double fiber_pick_success(const FiberTable& table, std::span<const double> prior);

struct GuessingReport {
  double p_guess = 0.0;
  double min_entropy_worst = 0.0;
  double min_entropy_average = 0.0;
};

/// Bayes-optimal single-guess success with a uniform prior: |image| / N.
GuessingReport guessing_probability(const FiberTable& table);
/// General prior: sum_y max_{x in fiber(y)} prior(x). `prior` is indexed by support index
/// and must sum to 1.
double guessing_probability(const FiberTable& table, std::span<const double> prior);

/// Smallest list covering posterior mass 1 - delta: ceil((1 - delta) k_y), at least 1.
/// Throws InvalidParameters when y is not in the table or delta is outside [0, 1].
std::uint64_t list_size(const FiberTable& table, const PublicObservable& y, double delta);
std::uint64_t list_size(std::uint64_t fiber_size, double delta);

double binary_entropy(double p);

/// max(0, (H - 1) / log2 N). Throws InvalidParameters for N < 2.
double fano_bound(double h_cond, std::uint64_t n);
/// Full form: H <= h2(P_e) + P_e log2(N - 1), with absolute slack `tol`.
bool fano_feasible(double p_error, double h_cond, std::uint64_t n, double tol = 1e-9);

/// Smallest possible maximum fiber of a map from N_bits-bit inputs to ell-bit outputs.
BigCount digest_bound(std::uint64_t n_bits, std::uint64_t ell);

struct CollisionExpectation {
  BigCount pairs;         // C(N, 2)
  BigCount range;         // M
  double value = 0.0;     // C(N, 2) / M
};

CollisionExpectation random_collision_expectation(std::uint64_t n, std::uint64_t m);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
};

/// Colliding pairs of a uniformly random function [N] -> [M], averaged over `trials`.
MonteCarloEstimate random_collision_monte_carlo(std::uint64_t n, std::uint64_t m,
                                                std::size_t trials, RandomSource& rng);

struct SecurityEstimate {
  double classical_bits = 0.0;
  double quantum_bits = 0.0;
  std::uint64_t public_bits = 0;  // L = m * ell
  bool caveat = true;
  std::string caveat_text = "post-structural-attack only";
};

/// Throws InvalidParameters unless 0 < p_guess <= 1.
SecurityEstimate security_bits(double p_guess, std::uint64_t public_bits = 0);

/// -log2 max_z P(z). Throws InvalidParameters for a table that does not sum to 1.
double min_entropy(std::span<const double> probs);

struct AdditivityResult {
  double sum_of_parts = 0.0;
  double joint = 0.0;
  bool holds = false;
};

/// Builds the product distribution of independent steps and compares its min-entropy with
/// the sum of per-step min-entropies. The product is materialized up to 2^20 outcomes.
AdditivityResult min_entropy_additivity_check(const std::vector<std::vector<double>>& steps,
                                              double tol = 1e-9);

/// log2 N - H(X|Y) <= m * ell.
bool information_bound_holds(const FiberTable& table);
/// Injective implies m * ell >= ceil(log2 N).
bool necessary_length_holds(const FiberTable& table);

}  // namespace nhp
