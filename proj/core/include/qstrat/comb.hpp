#pragma once

// Choi operators of multi-round strategies (quantum combs), the link
// product, and the channel library used by the experiments.

#include <cstdint>
#include <optional>
#include <vector>

#include "qstrat/labeled_operator.hpp"

namespace qstrat {

/// Input/output systems per round.  Round i consumes the systems in
/// inputs[i] and produces outputs[i]; a round may group several factors
/// (a one-turn tensor power has all A's in one group and all B's in another).
struct RoundStructure {
  std::vector<SystemList> inputs;
  std::vector<SystemList> outputs;

  std::size_t n() const noexcept { return inputs.size(); }
  std::size_t input_dim(std::size_t round) const { return total_dim(inputs.at(round)); }
  std::size_t output_dim(std::size_t round) const { return total_dim(outputs.at(round)); }

  /// Interleaved order A1 B1 ... An Bn (groups flattened).
  SystemList canonical_systems() const;
  /// Systems of rounds 1..k (0 <= k <= n), interleaved.
  SystemList rounds_upto(std::size_t k) const;
  /// Systems of rounds 1..k-1 followed by the inputs of round k (1 <= k <= n).
  SystemList upto_input(std::size_t k) const;

  /// Throws DomainError when n == 0, the group counts differ, or a group is empty.
  void validate() const;

  friend bool operator==(const RoundStructure&, const RoundStructure&) = default;
};

struct StrategyChoi {
  RoundStructure rounds;
  LabeledOperator op;  // over rounds.canonical_systems()

  StrategyChoi() = default;
  /// Throws LabelingError when op's system list is not the canonical one.
  StrategyChoi(RoundStructure r, LabeledOperator o);
};

struct GadcParams {
  double gamma = 0.0;
  double noise = 0.0;

  friend bool operator==(const GadcParams&, const GadcParams&) = default;
};

/// One-turn round structure A1 -> B1.
RoundStructure one_turn(std::size_t dim_in, std::size_t dim_out);

StrategyChoi gadc_choi(const GadcParams& p);
StrategyChoi identity_choi(std::size_t d);
/// One-turn strategy with trivial input whose Choi operator is `state`.
StrategyChoi preparation_choi(const CMatrix& state);
/// Channel d -> d that discards its input and prepares |k><k|.
StrategyChoi replacement_choi(std::size_t d, std::size_t k);
/// diag(1/M, 1 - 1/M).
CMatrix pi_state(double m);
/// |k><k| in dimension d.
CMatrix basis_state(std::size_t d, std::size_t k);

/// n uses of a one-turn channel in sequence: rounds A_k -> B_k.
StrategyChoi n_fold_sequential_choi(const StrategyChoi& channel, std::size_t n);
/// The n-fold tensor power as a single turn A1..An -> B1..Bn.
StrategyChoi tensor_power_choi(const StrategyChoi& channel, std::size_t n);
/// When every round of `s` is the same one-turn channel, returns it (on A1 B1).
std::optional<StrategyChoi> as_channel_power(const StrategyChoi& s);

/// Contracts shared system names: Tr_S[(I ⊗ b^{T_S})(a ⊗ I)].  Output systems
/// are a's unshared systems followed by b's unshared systems.
LabeledOperator link_product(const LabeledOperator& a, const LabeledOperator& b);

struct CombReport {
  bool pass = false;
  /// residuals[k] is the consistency residual of level k+1.
  std::vector<double> residuals;
  /// min_eigenvalues[k] is the least eigenvalue of N_[k+1].
  std::vector<double> min_eigenvalues;
};

inline constexpr double kCombTol = 1e-9;

CombReport verify_comb(const StrategyChoi& s, double tol = kCombTol);

/// Choi operator of a channel built from a seeded Gaussian isometry
/// A -> B ⊗ E with dim E = dA·dB.  The generator is std::mt19937_64 with
/// Box-Muller normals, so values are reproducible across platforms.
StrategyChoi random_channel_choi(std::size_t dim_a, std::size_t dim_b, std::uint64_t seed);

}  // namespace qstrat
