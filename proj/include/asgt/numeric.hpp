#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace asgt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Neumaier's variant of Kahan summation; robust when addends have mixed
// signs and magnitudes, which is the normal case for conservation audits.
class CompensatedSum {
 public:
  void add(double value) {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      compensation_ += (sum_ - t) + value;
    } else {
      compensation_ += (value - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

// Coordinate-wise compensated accumulation of vectors.
class CompensatedVectorSum {
 public:
  explicit CompensatedVectorSum(Eigen::Index n) : parts_(static_cast<std::size_t>(n)) {}

  void add(const Vector& v, double sign = 1.0) {
    for (Eigen::Index d = 0; d < v.size(); ++d) parts_[static_cast<std::size_t>(d)].add(sign * v[d]);
  }
  Vector value() const {
    Vector out(static_cast<Eigen::Index>(parts_.size()));
    for (std::size_t d = 0; d < parts_.size(); ++d) out[static_cast<Eigen::Index>(d)] = parts_[d].value();
    return out;
  }

 private:
  std::vector<CompensatedSum> parts_;
};

// SplitMix64 finalizer, used to derive independent stream seeds from
// (seed, agent, label) tuples.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(a) ^ (b + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

// 64-bit FNV-1a; stable across platforms, used for config fingerprints.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace asgt
