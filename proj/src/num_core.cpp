#include "ccfm/num_core.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include <boost/random/normal_distribution.hpp>

namespace ccfm {

namespace {

// Wichura's PPND16 (Applied Statistics algorithm AS241).
template <std::size_t N>
double poly(const std::array<double, N>& c, double x) {
  double acc = 0.0;
  for (std::size_t i = N; i-- > 0;) acc = acc * x + c[i];
  return acc;
}

constexpr std::array<double, 8> kA = {3.3871328727963666080e0, 1.3314166789178437745e+2,
                                      1.9715909503065514427e+3, 1.3731693765509461125e+4,
                                      4.5921953931549871457e+4, 6.7265770927008700853e+4,
                                      3.3430575583588128105e+4, 2.5090809287301226727e+3};
constexpr std::array<double, 8> kB = {1.0,
                                      4.2313330701600911252e+1,
                                      6.8718700749205790830e+2,
                                      5.3941960214247511077e+3,
                                      2.1213794301586595867e+4,
                                      3.9307895800092710610e+4,
                                      2.8729085735721942674e+4,
                                      5.2264952788528545610e+3};
constexpr std::array<double, 8> kC = {1.42343711074968357734e0, 4.63033784615654529590e0,
                                      5.76949722146069140550e0, 3.64784832476320460504e0,
                                      1.27045825245236838258e0, 2.41780725177450611770e-1,
                                      2.27238449892691845833e-2, 7.74545014278341407640e-4};
constexpr std::array<double, 8> kD = {1.0,
                                      2.05319162663775882187e0,
                                      1.67638483018380384940e0,
                                      6.89767334985100004550e-1,
                                      1.48103976427480074590e-1,
                                      1.51986665636164571966e-2,
                                      5.47593808499534494600e-4,
                                      1.05075007164441684324e-9};
constexpr std::array<double, 8> kE = {6.65790464350110377720e0, 5.46378491116411436990e0,
                                      1.78482653991729133580e0, 2.96560571828504891230e-1,
                                      2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                      2.71155556874348757815e-5, 2.01033439929228813265e-7};
constexpr std::array<double, 8> kF = {1.0,
                                      5.99832206555887937690e-1,
                                      1.36929880922735805310e-1,
                                      1.48753612908506148525e-2,
                                      7.86869131145613259100e-4,
                                      1.84631831751005468180e-5,
                                      1.42151175831644588870e-7,
                                      2.04426310338993978564e-15};

double ppnd16(double p) {
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * poly(kA, r) / poly(kB, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double z;
  if (r <= 5.0) {
    r -= 1.6;
    z = poly(kC, r) / poly(kD, r);
  } else {
    r -= 5.0;
    z = poly(kE, r) / poly(kF, r);
  }
  return q < 0.0 ? -z : z;
}

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
  double z = ppnd16(p);
  // One Newton step on Phi(z) - p. The upper tail is compared against 1 - p,
  // which is exact for p >= 0.5.
  const double dens = normal_pdf(z);
  if (dens > 0.0) {
    const double resid = p < 0.5 ? normal_cdf(z) - p : (1.0 - p) - normal_cdf(-z);
    z -= resid / dens;
  }
  return z;
}

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32), 0x9e3779b9u};
  engine_.seed(seq);
}

double SeededRng::normal() {
  boost::random::normal_distribution<double> dist;
  return dist(engine_);
}

double SeededRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

Vec sample_std_normal(SeededRng& rng, Eigen::Index d) {
  if (d < 1) throw DimensionError("sample_std_normal: d must be >= 1");
  Vec x(d);
  for (Eigen::Index i = 0; i < d; ++i) x[i] = rng.normal();
  return x;
}

Vec solve_spd(const Mat& A, const Vec& r) {
  if (A.rows() != A.cols() || A.rows() != r.size())
    throw DimensionError("solve_spd: shape mismatch");
  require_finite(A, "solve_spd matrix");
  require_finite(r, "solve_spd rhs");
  Eigen::LLT<Mat> llt(A);
  if (llt.info() != Eigen::Success) throw NumericalError("solve_spd: Cholesky factorization failed");
  Vec y = llt.solve(r);
  y += llt.solve(r - A * y);
  if (!y.allFinite()) throw NumericalError("solve_spd: non-finite solution");
  return y;
}

}  // namespace ccfm
