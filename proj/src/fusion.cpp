#include "ccafuse/fusion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

namespace ccafuse {

Matrix concat(const Matrix& x1, const Matrix& x2) {
  if (x1.rows() != x2.rows()) throw DimensionError("concat: row counts differ");
  Matrix out(x1.rows(), x1.cols() + x2.cols());
  out << x1, x2;
  return out;
}

FeatureMatrix concat(const FeatureMatrix& x1, const FeatureMatrix& x2) {
  FeatureMatrix out;
  out.values = concat(x1.values, x2.values);
  if (!x1.columns.empty() || !x2.columns.empty()) {
    for (Eigen::Index j = 0; j < x1.cols(); ++j) out.columns.push_back(x1.column_name(j));
    for (Eigen::Index j = 0; j < x2.cols(); ++j) out.columns.push_back(x2.column_name(j));
  }
  return out;
}

void validate_probabilities(const Matrix& p) {
  if (p.rows() < 1 || p.cols() < 2) {
    throw ContractError("probabilities: need at least one classifier and two classes");
  }
  for (Eigen::Index j = 0; j < p.rows(); ++j) {
    if (!p.row(j).allFinite() || p.row(j).minCoeff() < 0.0 || p.row(j).maxCoeff() > 1.0) {
      throw ContractError("probabilities: classifier " + std::to_string(j) + " has entries outside [0, 1]");
    }
    if (std::abs(p.row(j).sum() - 1.0) > 1e-6) {
      throw ContractError("probabilities: classifier " + std::to_string(j) + " does not sum to 1");
    }
  }
}

int max_fusion(const ClassProbabilities& p) {
  validate_probabilities(p);
  int best = 0;
  double best_value = -1.0;
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    const double value = p.col(i).maxCoeff();
    if (value > best_value) {
      best_value = value;
      best = static_cast<int>(i);
    }
  }
  return best;
}

namespace {

void check_sources(std::span<const Matrix> per_source) {
  if (per_source.empty()) throw ContractError("fusion: no sources");
  for (const auto& m : per_source) {
    if (m.rows() != per_source[0].rows() || m.cols() != per_source[0].cols()) {
      throw DimensionError("fusion: probability tables differ in shape");
    }
  }
}

ClassProbabilities gather_sample(std::span<const Matrix> per_source, Eigen::Index t) {
  ClassProbabilities p(static_cast<Eigen::Index>(per_source.size()), per_source[0].cols());
  for (std::size_t j = 0; j < per_source.size(); ++j) p.row(static_cast<Eigen::Index>(j)) = per_source[j].row(t);
  return p;
}

}  // namespace

Labels max_fusion(std::span<const Matrix> per_source) {
  check_sources(per_source);
  Labels out;
  out.reserve(static_cast<std::size_t>(per_source[0].rows()));
  for (Eigen::Index t = 0; t < per_source[0].rows(); ++t) out.push_back(max_fusion(gather_sample(per_source, t)));
  return out;
}

FuzzyMeasure::FuzzyMeasure(int sources) : sources_(sources) {
  if (sources < 1 || sources > kMaxSources) {
    throw ParameterError("fuzzy measure: source count must lie in [1, " + std::to_string(kMaxSources) + "]");
  }
  values_.assign(std::size_t{1} << sources, 0.0);
  values_.back() = 1.0;
}

FuzzyMeasure FuzzyMeasure::additive(std::span<const double> singleton_weights) {
  FuzzyMeasure mu(static_cast<int>(singleton_weights.size()));
  const double total = std::accumulate(singleton_weights.begin(), singleton_weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw ContractError("fuzzy measure: additive weights must sum to 1");
  for (std::uint32_t s = 1; s < mu.values_.size(); ++s) {
    double v = 0.0;
    for (int j = 0; j < mu.sources_; ++j)
      if (s & (1u << j)) v += singleton_weights[static_cast<std::size_t>(j)];
    mu.values_[s] = v;
  }
  mu.values_.back() = 1.0;
  mu.validate();
  return mu;
}

FuzzyMeasure FuzzyMeasure::uniform_additive(int sources) {
  std::vector<double> w(static_cast<std::size_t>(std::max(sources, 1)), 1.0 / std::max(sources, 1));
  if (sources < 1) throw ParameterError("fuzzy measure: source count must be >= 1");
  return additive(w);
}

FuzzyMeasure FuzzyMeasure::possibility(int sources) {
  FuzzyMeasure mu(sources);
  std::fill(mu.values_.begin() + 1, mu.values_.end(), 1.0);
  return mu;
}

FuzzyMeasure FuzzyMeasure::necessity(int sources) { return FuzzyMeasure(sources); }

FuzzyMeasure FuzzyMeasure::from_table(int sources, const std::map<std::uint32_t, double>& table) {
  FuzzyMeasure mu(sources);
  for (std::uint32_t s = 0; s < mu.values_.size(); ++s) {
    auto it = table.find(s);
    if (it == table.end()) {
      throw ContractError("fuzzy measure: subset " + std::to_string(s) + " is missing");
    }
    mu.values_[s] = it->second;
  }
  mu.validate();
  return mu;
}

bool FuzzyMeasure::satisfies_axioms(double tolerance) const {
  if (values_.empty()) return false;
  if (std::abs(values_.front()) > tolerance || std::abs(values_.back() - 1.0) > tolerance) return false;
  for (std::uint32_t s = 0; s < values_.size(); ++s) {
    if (!std::isfinite(values_[s])) return false;
    for (int j = 0; j < sources_; ++j) {
      const std::uint32_t bit = 1u << j;
      if (!(s & bit) && values_[s] > values_[s | bit] + tolerance) return false;
    }
  }
  return true;
}

void FuzzyMeasure::validate() const {
  if (!satisfies_axioms(1e-12)) {
    throw ContractError("fuzzy measure: violates mu(empty) = 0, mu(full) = 1 or monotonicity");
  }
}

double choquet(std::span<const double> f, const FuzzyMeasure& mu) {
  const auto n = static_cast<int>(f.size());
  if (n != mu.sources() || mu.values().empty()) {
    throw ContractError("choquet: " + std::to_string(n) + " scores for a measure over " +
                        std::to_string(mu.sources()) + " sources");
  }
  std::vector<int> order(f.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });

  double total = 0.0;
  double previous = 0.0;
  std::uint32_t remaining = mu.full_set();
  for (int i : order) {
    const double value = f[static_cast<std::size_t>(i)];
    if (!(value >= 0.0) || !std::isfinite(value)) throw ContractError("choquet: scores must be finite and >= 0");
    total += (value - previous) * mu(remaining);
    previous = value;
    remaining &= ~(1u << i);
  }
  return total;
}

namespace {

// Integral = offset + coefficients . mu(free subsets), with the free subsets
// being every mask other than the empty and full set.
void linearize(std::span<const double> f, int n, double& offset, Eigen::Ref<RowVector, 0, Eigen::InnerStride<>> coefficients) {
  std::vector<int> order(f.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
  const std::uint32_t full = (1u << n) - 1u;
  coefficients.setZero();
  offset = 0.0;
  double previous = 0.0;
  std::uint32_t remaining = full;
  for (int i : order) {
    const double delta = f[static_cast<std::size_t>(i)] - previous;
    if (remaining == full) {
      offset += delta;
    } else {
      coefficients(static_cast<Eigen::Index>(remaining) - 1) += delta;
    }
    previous = f[static_cast<std::size_t>(i)];
    remaining &= ~(1u << i);
  }
}

struct MonotonePolytope {
  int n = 0;
  std::vector<std::pair<int, int>> pairs;  // (lower, upper) indices into the free vector

  explicit MonotonePolytope(int sources) : n(sources) {
    const std::uint32_t full = (1u << n) - 1u;
    for (std::uint32_t s = 1; s < full; ++s) {
      for (int j = 0; j < n; ++j) {
        const std::uint32_t t = s | (1u << j);
        if (t != s && t != full) pairs.emplace_back(static_cast<int>(s) - 1, static_cast<int>(t) - 1);
      }
    }
  }

  // Euclidean projection via Dykstra's algorithm over the box and every
  // pairwise half-space.
  Vector project(const Vector& point) const {
    const Eigen::Index m = point.size();
    Vector x = point;
    Vector box_correction = Vector::Zero(m);
    std::vector<std::pair<double, double>> corrections(pairs.size(), {0.0, 0.0});
    for (int sweep = 0; sweep < 5000; ++sweep) {
      const Vector before = x;
      {
        const Vector y = x + box_correction;
        x = y.cwiseMax(0.0).cwiseMin(1.0);
        box_correction = y - x;
      }
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto [lo, hi] = pairs[k];
        double ylo = x(lo) + corrections[k].first;
        double yhi = x(hi) + corrections[k].second;
        double plo = ylo;
        double phi = yhi;
        if (ylo > yhi) plo = phi = 0.5 * (ylo + yhi);
        corrections[k] = {ylo - plo, yhi - phi};
        x(lo) = plo;
        x(hi) = phi;
      }
      if ((x - before).cwiseAbs().maxCoeff() < 1e-13) break;
    }
    return x;
  }
};

FuzzyMeasure to_measure(int n, const Vector& free_values) {
  FuzzyMeasure mu(n);
  for (Eigen::Index k = 0; k < free_values.size(); ++k) mu.set(static_cast<std::uint32_t>(k + 1), free_values(k));
  return mu;
}

// Enforce the axioms exactly after an approximate projection: clamp to the box,
// then lift every superset to at least the max over its immediate subsets.
void repair(FuzzyMeasure& mu) {
  const std::uint32_t full = mu.full_set();
  for (std::uint32_t s = 1; s < full; ++s) mu.set(s, std::clamp(mu(s), 0.0, 1.0));
  for (std::uint32_t s = 1; s < full; ++s) {
    double v = mu(s);
    for (int j = 0; j < mu.sources(); ++j)
      if (s & (1u << j)) v = std::max(v, mu(s & ~(1u << j)));
    mu.set(s, v);
  }
}

double squared_error(const Matrix& a, const Vector& offsets, const Vector& targets, const Vector& free_values) {
  return (a * free_values + offsets - targets).squaredNorm();
}

Vector free_part(const FuzzyMeasure& mu) {
  const auto m = static_cast<Eigen::Index>(mu.values().size()) - 2;
  Vector v(m);
  for (Eigen::Index k = 0; k < m; ++k) v(k) = mu(static_cast<std::uint32_t>(k + 1));
  return v;
}

}  // namespace

FuzzyFit fit_fuzzy_measure(const Matrix& scores, const Vector& targets, Warnings* warnings) {
  const auto n = static_cast<int>(scores.cols());
  if (n < 1 || n > FuzzyMeasure::kMaxSources) {
    throw ParameterError("fit_fuzzy_measure: source count must lie in [1, 6]");
  }
  if (scores.rows() != targets.size() || scores.rows() < 1) {
    throw DimensionError("fit_fuzzy_measure: scores and targets differ in length");
  }
  require_finite(scores, "fit_fuzzy_measure scores");
  if (scores.minCoeff() < 0.0) throw ContractError("fit_fuzzy_measure: scores must be nonnegative");

  const FuzzyMeasure baseline = FuzzyMeasure::uniform_additive(n);
  FuzzyFit fit;
  fit.measure = baseline;
  if (targets.maxCoeff() - targets.minCoeff() < 1e-12) {
    warn(warnings, "fit_fuzzy_measure: degenerate (constant) targets");
  }
  if (scores.rows() < 10 * (Eigen::Index{1} << n)) {
    warn(warnings, "fit_fuzzy_measure: fewer than 10 * 2^n observations");
  }

  const Eigen::Index free = (Eigen::Index{1} << n) - 2;
  Matrix a(scores.rows(), std::max<Eigen::Index>(free, 1));
  a.setZero();
  Vector offsets(scores.rows());
  for (Eigen::Index m = 0; m < scores.rows(); ++m) {
    const RowVector row = scores.row(m);
    std::span<const double> f(row.data(), static_cast<std::size_t>(n));
    if (free > 0) {
      linearize(f, n, offsets(m), a.row(m).head(free));
    } else {
      offsets(m) = row(0);
    }
  }
  if (free == 0) {
    // One source: mu({1}) = 1 is forced by the boundary axiom.
    fit.squared_error = (offsets - targets).squaredNorm();
    fit.baseline_error = fit.squared_error;
    return fit;
  }
  a.conservativeResize(Eigen::NoChange, free);

  const Matrix gram = a.transpose() * a;
  const Vector rhs = a.transpose() * (targets - offsets);
  const double lipschitz = 2.0 * Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly)
                                     .eigenvalues()
                                     .maxCoeff();
  MonotonePolytope polytope(n);
  Vector x = free_part(baseline);
  fit.baseline_error = squared_error(a, offsets, targets, x);

  if (lipschitz > 0.0) {
    // Start from the projected unconstrained optimum when it beats the baseline.
    const Vector ls = gram.ldlt().solve(rhs);
    if (ls.allFinite()) {
      const Vector start = polytope.project(ls);
      if (squared_error(a, offsets, targets, start) < fit.baseline_error) x = start;
    }
    const double step = 1.0 / lipschitz;
    int it = 0;
    for (; it < 20000; ++it) {
      const Vector grad = 2.0 * (gram * x - rhs);
      const Vector next = polytope.project(x - step * grad);
      const double change = (next - x).cwiseAbs().maxCoeff();
      x = next;
      if (change < 1e-10) break;
    }
    fit.iterations = it;
  }

  FuzzyMeasure candidate = to_measure(n, x);
  repair(candidate);
  const double error = squared_error(a, offsets, targets, free_part(candidate));
  if (error <= fit.baseline_error) {
    fit.measure = candidate;
    fit.squared_error = error;
  } else {
    warn(warnings, "fit_fuzzy_measure: fit did not improve on the uniform additive measure");
    fit.squared_error = fit.baseline_error;
  }
  fit.measure.validate();
  return fit;
}

FuzzyFit fit_fuzzy_measure(std::span<const Matrix> per_source, const Labels& labels, Warnings* warnings) {
  check_sources(per_source);
  const Eigen::Index samples = per_source[0].rows();
  const Eigen::Index classes = per_source[0].cols();
  if (static_cast<Eigen::Index>(labels.size()) != samples) {
    throw DimensionError("fit_fuzzy_measure: label count differs from probability rows");
  }
  const auto n = static_cast<Eigen::Index>(per_source.size());
  Matrix scores(samples * classes, n);
  Vector targets(samples * classes);
  for (Eigen::Index t = 0; t < samples; ++t) {
    for (Eigen::Index c = 0; c < classes; ++c) {
      const Eigen::Index row = t * classes + c;
      for (Eigen::Index j = 0; j < n; ++j) scores(row, j) = per_source[static_cast<std::size_t>(j)](t, c);
      targets(row) = labels[static_cast<std::size_t>(t)] == c ? 1.0 : 0.0;
    }
  }
  return fit_fuzzy_measure(scores, targets, warnings);
}

int choquet_fusion_predict(const ClassProbabilities& p, const FuzzyMeasure& mu) {
  validate_probabilities(p);
  int best = 0;
  double best_value = -1.0;
  std::vector<double> f(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    for (Eigen::Index j = 0; j < p.rows(); ++j) f[static_cast<std::size_t>(j)] = p(j, c);
    const double value = choquet(f, mu);
    if (value > best_value) {
      best_value = value;
      best = static_cast<int>(c);
    }
  }
  return best;
}

Labels choquet_fusion_predict(std::span<const Matrix> per_source, const FuzzyMeasure& mu) {
  check_sources(per_source);
  Labels out;
  out.reserve(static_cast<std::size_t>(per_source[0].rows()));
  for (Eigen::Index t = 0; t < per_source[0].rows(); ++t) {
    out.push_back(choquet_fusion_predict(gather_sample(per_source, t), mu));
  }
  return out;
}

}  // namespace ccafuse
