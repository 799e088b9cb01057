#ifndef HOSPMORT_RNG_HPP
#define HOSPMORT_RNG_HPP

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace hospmort {

// A seeded random stream. The pair (seed, stream_id) fully determines the
// draw sequence; different stream ids give decorrelated engines through
// std::seed_seq mixing. Not thread-safe: each worker owns its stream.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  // Exponential with unit rate.
  double exponential();
  // Gamma with the given shape and unit scale.
  double gamma(double shape);
  // Inverse gamma with density proportional to x^(-shape-1) exp(-scale/x).
  double inverse_gamma(double shape, double scale);
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer on [0, n).
  std::uint64_t index(std::uint64_t n);

  Eigen::VectorXd normal_vector(Eigen::Index n);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace hospmort

#endif  // HOSPMORT_RNG_HPP
