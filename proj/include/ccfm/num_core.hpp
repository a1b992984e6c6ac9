#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ccfm {

/// A column vector of dynamic size, templated on scalar type.
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// A dense matrix of dynamic size, templated on scalar type.
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = VectorX<double>;
using Mat = MatrixX<double>;

// Error idiom: everything thrown by the library derives from one of these.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Standard normal CDF, evaluated through erfc so the lower tail keeps full
/// relative precision.
double normal_cdf(double z);

/// Inverse of the standard normal CDF. Throws DomainError unless 0 < p < 1.
double normal_quantile(double p);

/// Deterministic random stream keyed by (seed, stream_id).
///
/// The engine is std::mt19937_64 seeded through std::seed_seq, both of which
/// are fully specified by the standard; normal variates come from
/// Boost.Random so draws are identical across standard libraries.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  double normal();
  /// Uniform on [0, 1).
  double uniform();
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

Vec sample_std_normal(SeededRng& rng, Eigen::Index d);

/// Solve A y = r for symmetric positive definite A by dense Cholesky with one
/// step of iterative refinement.
Vec solve_spd(const Mat& A, const Vec& r);

/// Throws NumericalError when any entry is NaN or infinite.
template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& x, const char* what) {
  if (!x.allFinite()) throw NumericalError(std::string("non-finite values in ") + what);
}

template <typename DerivedA, typename DerivedB>
void require_same_size(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                       const char* what) {
  if (a.size() != b.size())
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
}

}  // namespace ccfm
