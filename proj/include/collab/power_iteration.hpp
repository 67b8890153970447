#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <type_traits>

#include <Eigen/Core>

#include "collab/errors.hpp"

namespace collab {

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct PowerResult {
  Scalar lambda{};
  Vector<Scalar> vector;  // normalized to unit L1 norm
  int iterations = 0;
  double residual = 0.0;  // |A v - lambda v|_1 with |v|_1 = 1
};

/// Power iteration for the dominant eigenvalue of a row-vector operator.
///
/// `apply(in, out)` must compute out = in * A. The iterate is renormalized to
/// unit L1 norm each step. For real operators lambda is the mass ratio
/// sum(out) / sum(in); for complex operators it is the Rayleigh quotient
/// <v, Av> / <v, v>. Stops when the L1 residual drops below `tolerance`.
template <typename Scalar, typename Apply>
PowerResult<Scalar> power_iterate(Apply&& apply, Vector<Scalar> v, double tolerance,
                                  int max_iterations) {
  const double norm0 = v.template lpNorm<1>();
  if (!(norm0 > 0)) throw DomainError("power iteration needs a non-zero start vector");
  v /= norm0;
  Vector<Scalar> w(v.size());
  PowerResult<Scalar> out;
  for (int it = 1; it <= max_iterations; ++it) {
    apply(v, w);
    Scalar lambda;
    if constexpr (is_complex<Scalar>::value) {
      lambda = v.dot(w) / v.squaredNorm();  // Eigen's dot conjugates the left side
    } else {
      lambda = w.sum() / v.sum();
    }
    const double residual = (w - lambda * v).template lpNorm<1>();
    const double wnorm = w.template lpNorm<1>();
    if (!(wnorm > 1e-300) || std::abs(lambda) < 1e-14) {
      throw ConvergenceError("dominant eigenvalue is zero: the hole absorbs all mass",
                             residual, it);
    }
    out.lambda = lambda;
    out.iterations = it;
    out.residual = residual;
    v = w / wnorm;
    if (residual <= tolerance) {
      out.vector = std::move(v);
      return out;
    }
  }
  throw ConvergenceError("power iteration did not converge (residual " +
                             std::to_string(out.residual) + ")",
                         out.residual, max_iterations);
}

}  // namespace collab
