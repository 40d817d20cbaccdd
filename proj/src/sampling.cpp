#include "hdcca/sampling.hpp"

#include <cmath>
#include <numbers>

#include "hdcca/errors.hpp"

namespace hdcca {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

SampleSeed SampleSeed::child(std::uint64_t index) const {
  return SampleSeed{splitmix64(splitmix64(root_seed) ^ stream_id), index};
}

Philox4x32::Philox4x32(SampleSeed seed)
    : key_{static_cast<std::uint32_t>(seed.root_seed), static_cast<std::uint32_t>(seed.root_seed >> 32)},
      counter_hi_(seed.stream_id) {}

std::array<std::uint32_t, 4> Philox4x32::block(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

void Philox4x32::refill() {
  const std::array<std::uint32_t, 4> ctr{
      static_cast<std::uint32_t>(counter_lo_), static_cast<std::uint32_t>(counter_lo_ >> 32),
      static_cast<std::uint32_t>(counter_hi_), static_cast<std::uint32_t>(counter_hi_ >> 32)};
  buffer_ = block(ctr, key_);
  ++counter_lo_;
  next_ = 0;
}

Philox4x32::result_type Philox4x32::operator()() {
  if (next_ >= 4) refill();
  const std::uint64_t lo = buffer_[next_];
  const std::uint64_t hi = buffer_[next_ + 1];
  next_ += 2;
  return (hi << 32) | lo;
}

double GaussianStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double GaussianStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

DataMatrixPair sample_spiked(const ModelConfig& config, const SpikeSpec& spikes, SampleSeed seed) {
  spikes.check_fits(config);
  const int p = config.p();
  const int q = config.q();
  const int n = config.n();
  const int k = static_cast<int>(spikes.size());

  GaussianStream stream(seed);
  Eigen::MatrixXd y(q, n);
  stream.fill(y);
  Eigen::MatrixXd x(p, n);
  stream.fill(x);
  for (int i = 0; i < k; ++i) {
    const double r = spikes[i];
    x.row(i) = std::sqrt(1.0 - r) * x.row(i) + std::sqrt(r) * y.row(i);
  }
  return DataMatrixPair{std::move(x), std::move(y), config, spikes, seed};
}

Eigen::MatrixXd sample_goe(int k, double variance_scale, GaussianStream& stream) {
  if (k < 1) throw DomainError("sample_goe needs k >= 1");
  if (!(variance_scale > 0.0)) throw DomainError("sample_goe needs variance_scale > 0");
  const double off = std::sqrt(variance_scale);
  const double diag = std::sqrt(2.0 * variance_scale);
  Eigen::MatrixXd g(k, k);
  for (int i = 0; i < k; ++i) {
    g(i, i) = diag * stream.normal();
    for (int j = i + 1; j < k; ++j) {
      g(i, j) = off * stream.normal();
      g(j, i) = g(i, j);
    }
  }
  return g;
}

Eigen::MatrixXd sample_goe(int k, double variance_scale, SampleSeed seed) {
  GaussianStream stream(seed);
  return sample_goe(k, variance_scale, stream);
}

}  // namespace hdcca
