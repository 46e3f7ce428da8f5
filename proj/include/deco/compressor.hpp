#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace deco {

template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace detail {

template <class Scalar>
inline bool entry_is_finite(const Scalar&) {
  return true;  // exact scalars are always finite
}
inline bool entry_is_finite(const double& x) { return std::isfinite(x); }
inline bool entry_is_finite(const float& x) { return std::isfinite(x); }

}  // namespace detail

template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!detail::entry_is_finite(v(i))) return false;
  return true;
}

inline void validate_delta(double delta) {
  if (!(delta > 0.0) || delta > 1.0 || !std::isfinite(delta))
    throw std::invalid_argument("compression ratio must lie in (0, 1]");
}

/// Number of coordinates Top-k keeps for ratio `delta` on dimension `d`:
/// ceil(delta * d), at least 1. The tiny backoff absorbs the representation
/// error of decimal ratios (0.1 * 10 must give k = 1, not 2).
inline Eigen::Index kept_count(double delta, Eigen::Index d) {
  validate_delta(delta);
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  const double scaled = delta * static_cast<double>(d);
  auto k = static_cast<Eigen::Index>(std::ceil(scaled - 1e-9));
  return std::clamp<Eigen::Index>(k, 1, d);
}

/// A sparsified update in wire form: the kept coordinates as (index, value)
/// pairs, indices strictly increasing. This is what a worker would put on
/// the wire (the timing model charges delta * S_g bits for it); the math
/// path materializes it densely at the aggregation boundary.
template <class Scalar>
struct SparseUpdate {
  Eigen::Index dim = 0;
  std::vector<Eigen::Index> indices;
  std::vector<Scalar> values;

  VectorX<Scalar> materialize() const {
    VectorX<Scalar> out = VectorX<Scalar>::Zero(dim);
    for (std::size_t j = 0; j < indices.size(); ++j)
      out(indices[j]) = values[j];
    return out;
  }
};

/// Top-k sparsifier: keeps the k largest-magnitude coordinates (ties broken
/// toward the lowest index). Selection is an O(d) partial select, not a
/// full sort.
template <class Derived>
SparseUpdate<typename Derived::Scalar> top_k_sparse(
    const Eigen::MatrixBase<Derived>& v, Eigen::Index k) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index d = v.size();
  if (d < 1) throw std::invalid_argument("top_k: empty vector");
  if (k < 1 || k > d) throw std::invalid_argument("top_k: k out of range");
  if (!all_finite(v)) throw std::invalid_argument("top_k: non-finite input");

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  if (k < d) {
    // Strict total order: larger magnitude first, lower index wins a tie.
    auto before = [&](Eigen::Index a, Eigen::Index b) {
      using std::abs;
      const auto ma = abs(v(a));
      const auto mb = abs(v(b));
      if (mb < ma) return true;
      if (ma < mb) return false;
      return a < b;
    };
    std::nth_element(idx.begin(), idx.begin() + (k - 1), idx.end(), before);
    idx.resize(static_cast<std::size_t>(k));
    std::sort(idx.begin(), idx.end());
  }
  SparseUpdate<Scalar> out;
  out.dim = d;
  out.indices = std::move(idx);
  out.values.reserve(static_cast<std::size_t>(k));
  for (Eigen::Index i : out.indices) out.values.push_back(v(i));
  return out;
}

template <class Derived>
VectorX<typename Derived::Scalar> top_k_count(
    const Eigen::MatrixBase<Derived>& v, Eigen::Index k) {
  if (v.size() >= 1 && k == v.size()) {
    if (!all_finite(v)) throw std::invalid_argument("top_k: non-finite input");
    return v;
  }
  return top_k_sparse(v, k).materialize();
}

template <class Derived>
VectorX<typename Derived::Scalar> top_k(const Eigen::MatrixBase<Derived>& v,
                                        double delta) {
  return top_k_count(v, kept_count(delta, v.size()));
}

/// Per-worker error-feedback accumulator. Starts at zero; after every
/// compression step, residual == (input + old residual) - emitted update,
/// coordinate-wise exact.
template <class Scalar>
struct ErrorState {
  VectorX<Scalar> residual;

  explicit ErrorState(Eigen::Index d) : residual(VectorX<Scalar>::Zero(d)) {}
};

template <class Scalar>
struct CompressResult {
  VectorX<Scalar> update;
  ErrorState<Scalar> next;
};

/// One error-feedback compression step:
///   update = top_k(g + e, delta),  e' = g + e - update.
/// The sparsified update plus the new residual reconstruct g + e exactly.
template <class Scalar>
CompressResult<Scalar> ef_compress(const VectorX<Scalar>& g,
                                   const ErrorState<Scalar>& e, double delta) {
  if (g.size() != e.residual.size())
    throw std::invalid_argument("ef_compress: dimension mismatch");
  if (!all_finite(g) || !all_finite(e.residual))
    throw std::invalid_argument("ef_compress: non-finite input");
  VectorX<Scalar> acc = g + e.residual;
  CompressResult<Scalar> r{top_k(acc, delta), ErrorState<Scalar>(g.size())};
  r.next.residual = acc - r.update;
  return r;
}

}  // namespace deco
