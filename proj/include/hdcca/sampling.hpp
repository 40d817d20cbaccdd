#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include <Eigen/Core>

#include "hdcca/rmt_core.hpp"

namespace hdcca {

// Identifies one random stream. The root seed keys the generator and the
// stream id occupies the upper half of its 128-bit counter, so streams that
// share a root seed never overlap.
struct SampleSeed {
  std::uint64_t root_seed = 0;
  std::uint64_t stream_id = 0;

  // Seed for the index-th sub-stream of this stream. Sub-streams of one parent
  // share a derived key and are separated by counter, like siblings above.
  SampleSeed child(std::uint64_t index) const;

  friend bool operator==(const SampleSeed&, const SampleSeed&) = default;
};

// Philox4x32-10 (Salmon et al., SC'11). Satisfies UniformRandomBitGenerator
// with 64-bit output; each counter step yields two outputs.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;

  explicit Philox4x32(SampleSeed seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t counter_lo_ = 0;
  std::uint64_t counter_hi_;
  std::array<std::uint32_t, 4> buffer_{};
  int next_ = 4;
};

// Standard normal draws from a Philox stream via Box-Muller: two 53-bit
// uniforms u1 in (0, 1], u2 in [0, 1) give sqrt(-2 log u1) cos(2 pi u2) and
// then the matching sin term. Not shareable across threads.
class GaussianStream {
 public:
  explicit GaussianStream(SampleSeed seed) : engine_(seed) {}

  double uniform();  // [0, 1)
  double normal();

  template <typename Derived>
  void fill(Eigen::DenseBase<Derived>& m) {
    // Column-major order so the draw sequence is defined by storage order.
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        m(i, j) = normal();
      }
    }
  }

 private:
  Philox4x32 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct DataMatrixPair {
  Eigen::MatrixXd x;  // p x n, rows are variables
  Eigen::MatrixXd y;  // q x n
  ModelConfig config;
  SpikeSpec spikes;
  SampleSeed seed;
};

// X = W + T Y with Y ~ N(0, 1) entries, T = diag(sqrt r_i) padded with
// zeros, and W independent of Y with row variance 1 - r_i on the first k
// rows and 1 elsewhere. Population canonical correlations are sqrt(r_i).
// Y is drawn first, then W, each column-major.
DataMatrixPair sample_spiked(const ModelConfig& config, const SpikeSpec& spikes, SampleSeed seed);

// Symmetric k x k matrix with entry (i, j), i <= j, drawn
// N(0, variance_scale * (1 + delta_ij)), upper triangle filled row by row.
Eigen::MatrixXd sample_goe(int k, double variance_scale, SampleSeed seed);
Eigen::MatrixXd sample_goe(int k, double variance_scale, GaussianStream& stream);

}  // namespace hdcca
