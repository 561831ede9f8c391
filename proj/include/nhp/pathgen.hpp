#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nhp/object.hpp"
#include "nhp/params.hpp"
#include "nhp/random.hpp"

namespace nhp {

/// Draws one hidden object. Consumes 32 bytes of `rng` to root the four per-source
/// streams "x0", "macro", "micro" and "noise".
MicroObject sample_object(const ParameterSet& p, RandomSource& rng);

/// Probability that sample_object returns x: uniform x0 (when free), macro and micro indices,
/// truncated discrete Gaussian noise. Zero for inadmissible objects.
double sample_probability(const MicroObject& x, const ParameterSet& p);

/// Optional low-complexity filter: reject samples whose macro-index order-0 entropy
/// (bits/symbol) is below `min_macro_entropy`. The predicate is part of the distribution.
struct RejectionPolicy {
  double min_macro_entropy = 0.0;
  std::size_t max_attempts = 1000;

  std::string describe() const;
};

/// Samples under a rejection policy. Returns nullopt when max_attempts are exhausted.
std::optional<MicroObject> sample_object_rejecting(const ParameterSet& p, RandomSource& rng,
                                                   const RejectionPolicy& policy);

/// Order-0 empirical entropy (bits/symbol) of a symbol histogram.
double histogram_entropy(const std::vector<std::uint64_t>& counts);

/// Sample autocorrelation at `lag`; nullopt when the sequence is constant or too short.
std::optional<double> autocorrelation(const std::vector<double>& seq, std::size_t lag);

struct DiagnosticsReport {
  std::size_t samples = 0;
  /// [step][symbol] counts.
  std::vector<std::vector<std::uint64_t>> macro_histogram, micro_histogram;
  std::vector<double> macro_step_entropy, micro_step_entropy;
  /// Entropy of the pooled index histograms, bits/symbol.
  double macro_entropy = 0.0;
  double micro_entropy = 0.0;
  /// [coordinate][lag-1] autocorrelation of state-coordinate sequences, averaged over samples.
  std::vector<std::vector<double>> state_autocorrelation;
  /// Pooled lag 1..4 autocorrelation of the macro-index sequences.
  std::vector<double> macro_index_autocorrelation;
  /// Order-0 entropy of the concatenated witness encodings, bits per byte.
  double encoding_entropy_bits_per_byte = 0.0;
};

DiagnosticsReport generator_diagnostics(const std::vector<MicroObject>& samples,
                                        const ParameterSet& p);

}  // namespace nhp
