#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace netnewton {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Raised when an iteration produces non-finite values, diverges, or a
/// factorization that the theory guarantees to exist fails.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Largest np for which dense np x np assemblies are allowed.
inline constexpr Index kDenseGuard = 5000;

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

/// The network-wide iterate y = [x_1; ...; x_n], n blocks of dimension p.
template <typename Scalar>
class StackedVector {
 public:
  using VectorType = Vector<Scalar>;

  StackedVector() = default;

  StackedVector(Index agents, Index dim)
      : agents_(agents), dim_(dim), data_(VectorType::Zero(agents * dim)) {}

  StackedVector(Index agents, Index dim, VectorType flat)
      : agents_(agents), dim_(dim), data_(std::move(flat)) {
    require(data_.size() == agents * dim, "StackedVector: flat size must equal agents * dim");
  }

  /// Stacks n copies of x.
  static StackedVector replicate(const VectorType& x, Index agents) {
    return StackedVector(agents, x.size(), x.replicate(agents, 1));
  }

  Index agents() const { return agents_; }
  Index dim() const { return dim_; }

  auto block(Index i) { return data_.segment(i * dim_, dim_); }
  auto block(Index i) const { return data_.segment(i * dim_, dim_); }

  VectorType& flat() { return data_; }
  const VectorType& flat() const { return data_; }

  bool same_shape(const StackedVector& other) const {
    return agents_ == other.agents_ && dim_ == other.dim_;
  }

  StackedVector& operator+=(const StackedVector& other) {
    data_ += other.data_;
    return *this;
  }
  StackedVector& operator-=(const StackedVector& other) {
    data_ -= other.data_;
    return *this;
  }
  friend StackedVector operator+(StackedVector a, const StackedVector& b) { return a += b; }
  friend StackedVector operator-(StackedVector a, const StackedVector& b) { return a -= b; }
  friend StackedVector operator*(Scalar s, StackedVector a) {
    a.data_ *= s;
    return a;
  }
  friend StackedVector operator-(StackedVector a) {
    a.data_ = -a.data_;
    return a;
  }

 private:
  Index agents_ = 0;
  Index dim_ = 0;
  VectorType data_;
};

}  // namespace netnewton
