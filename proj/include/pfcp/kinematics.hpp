#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace pfcp
{

template <class T>
using Mat3 = Eigen::Matrix<T, 3, 3>;

template <class T>
using Vec3 = Eigen::Matrix<T, 3, 1>;

/// Rank-2 tensor in 3D. Plane-strain problems embed their in-plane block
/// and keep the out-of-plane stretch equal to one.
using Tensor2 = Mat3<double>;
using Vector3 = Vec3<double>;

inline constexpr double kSymmetryTolerance = 1e-12;

struct MacaulayParts
{
  double positive;
  double negative;
};

/// <x>+ = (x+|x|)/2 and <x>- = (x-|x|)/2.
MacaulayParts macaulay(double x);

/// Positive part usable with automatic-differentiation scalars.
template <class T>
T positive_part(const T& x)
{
  return x > 0.0 ? x : T(0.0 * x);
}

template <class T>
T negative_part(const T& x)
{
  return x < 0.0 ? x : T(0.0 * x);
}

struct VolDevDecomposition
{
  double trace_part;
  Tensor2 deviatoric_part;
};

bool is_symmetric(const Tensor2& a, double rel_tol = kSymmetryTolerance);

/// (Ce - I)/2. Throws std::invalid_argument for non-symmetric input.
Tensor2 green_lagrange(const Tensor2& ce);

/// Ce * Se, generally non-symmetric.
Tensor2 mandel_stress(const Tensor2& ce, const Tensor2& se);

VolDevDecomposition vol_dev_split(const Tensor2& a);

template <class T>
T double_contraction(const Mat3<T>& a, const Mat3<T>& b)
{
  return (a.array() * b.array()).sum();
}

template <class T>
Mat3<T> deviator(const Mat3<T>& a)
{
  const T third_trace = a.trace() / 3.0;
  Mat3<T> dev = a;
  for (int i = 0; i < 3; ++i)
    dev(i, i) -= third_trace;
  return dev;
}

template <class T>
Mat3<T> green_lagrange_unchecked(const Mat3<T>& ce)
{
  Mat3<T> e = 0.5 * ce;
  for (int i = 0; i < 3; ++i)
    e(i, i) -= 0.5;
  return e;
}

} // namespace pfcp
