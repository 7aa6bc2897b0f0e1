#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "ccafuse/dataset.hpp"
#include "ccafuse/errors.hpp"
#include "ccafuse/numerics.hpp"

namespace ccafuse {

/// Feature-level fusion: columns of x1 followed by columns of x2.
Matrix concat(const Matrix& x1, const Matrix& x2);
FeatureMatrix concat(const FeatureMatrix& x1, const FeatureMatrix& x2);

/// Class probabilities for one sample: one row per classifier, one column per
/// class. Every row must lie in [0, 1] and sum to 1 within 1e-6.
using ClassProbabilities = Matrix;

void validate_probabilities(const Matrix& p);

/// argmax_i max_j P_j(class i); ties go to the lowest class index.
int max_fusion(const ClassProbabilities& p);
/// Batched form: per_source[j] is the N x C probability table of classifier j.
Labels max_fusion(std::span<const Matrix> per_source);

/// Set function over subsets of n sources, stored by bitmask (bit j set means
/// source j is in the subset).
class FuzzyMeasure {
 public:
  static constexpr int kMaxSources = 6;

  FuzzyMeasure() = default;
  /// mu(empty) = 0, mu(full) = 1, everything else 0.
  explicit FuzzyMeasure(int sources);

  static FuzzyMeasure additive(std::span<const double> singleton_weights);
  static FuzzyMeasure uniform_additive(int sources);
  /// 1 on every nonempty subset; the Choquet integral becomes max.
  static FuzzyMeasure possibility(int sources);
  /// 0 everywhere except the full set; the Choquet integral becomes min.
  static FuzzyMeasure necessity(int sources);
  /// Throws ContractError when a subset is missing or an axiom fails.
  static FuzzyMeasure from_table(int sources, const std::map<std::uint32_t, double>& table);

  int sources() const { return sources_; }
  std::uint32_t full_set() const { return (1u << sources_) - 1u; }
  double operator()(std::uint32_t subset) const { return values_.at(subset); }
  void set(std::uint32_t subset, double value) { values_.at(subset) = value; }
  const std::vector<double>& values() const { return values_; }

  /// Boundary conditions and monotonicity over every (A, A + {i}) pair.
  bool satisfies_axioms(double tolerance = 1e-12) const;
  void validate() const;

 private:
  int sources_ = 0;
  std::vector<double> values_;
};

/// Discrete Choquet integral: sum_i (f_(i) - f_(i-1)) mu(A_(i)) with f sorted
/// ascending, f_(0) = 0 and A_(i) the sources holding the n - i + 1 largest
/// scores. Scores must be nonnegative.
double choquet(std::span<const double> f, const FuzzyMeasure& mu);

struct FuzzyFit {
  FuzzyMeasure measure;
  double squared_error = 0.0;
  double baseline_error = 0.0;  // squared error of the uniform additive measure
  int iterations = 0;
};

/// Least-squares (Tanaka-Sugeno) identification of a fuzzy measure.
///
/// `scores` is M x n (one row of per-source scores per observation) and
/// `targets` the M desired integrals. The integral is linear in the measure,
/// so this is a convex QP over the 2^n - 2 free subset values. It is solved by
/// projected gradient descent; the projection onto the monotone polytope
/// (box [0, 1] plus one half-space per (A, A + {i}) pair) is computed with
/// Dykstra's alternating projections.
FuzzyFit fit_fuzzy_measure(const Matrix& scores, const Vector& targets, Warnings* warnings = nullptr);

/// Decision-level fit: per_source[j] is the N x C probability table of
/// classifier j, and the target for (sample, class) is the one-hot label.
FuzzyFit fit_fuzzy_measure(std::span<const Matrix> per_source, const Labels& labels,
                           Warnings* warnings = nullptr);

/// argmax over classes of the Choquet integral of that class's per-source
/// probabilities; ties go to the lowest class index.
int choquet_fusion_predict(const ClassProbabilities& p, const FuzzyMeasure& mu);
Labels choquet_fusion_predict(std::span<const Matrix> per_source, const FuzzyMeasure& mu);

}  // namespace ccafuse
