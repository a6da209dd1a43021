#pragma once

#include <limits>
#include <vector>

namespace dfg {

// Three-term recursion of (L̃+α)u = 0 along a ray:
//   b(k−1)(u_k − u_{k−1}) + b(k)(u_k − u_{k+1}) + (c_k + α m_k) u_k = 0.

template <typename T>
T ray_step_forward(const T& b_prev, const T& b_next, const T& m, const T& c, const T& alpha, const T& u_k,
                   const T& u_prev) {
  return ((b_prev + b_next + c + alpha * m) * u_k - b_prev * u_prev) / b_next;
}

template <typename T>
T ray_step_backward(const T& b_prev, const T& b_next, const T& m, const T& c, const T& alpha, const T& u_k,
                    const T& u_next) {
  return ((b_prev + b_next + c + alpha * m) * u_k - b_next * u_next) / b_prev;
}

/// u_0..u_depth from (u_0, u_1); weight(k) joins k and k+1.
template <typename T, typename Weight, typename Measure, typename Killing>
std::vector<T> forward_solution(Weight weight, Measure measure, Killing killing, const T& alpha, const T& u0,
                                const T& u1, long depth) {
  std::vector<T> u{u0, u1};
  u.reserve(depth + 1);
  for (long k = 1; k < depth; ++k)
    u.push_back(ray_step_forward<T>(weight(k - 1), weight(k), measure(k), killing(k), alpha, u[k], u[k - 1]));
  u.resize(depth + 1);
  return u;
}

/// Solution vanishing at `far` and equal to 1 at far−1, back to depth 0: the
/// truncated minimal solution.
template <typename T, typename Weight, typename Measure, typename Killing>
std::vector<T> backward_solution(Weight weight, Measure measure, Killing killing, const T& alpha, long far) {
  std::vector<T> u(far + 1, T(0));
  u[far - 1] = T(1);
  for (long k = far - 1; k >= 1; --k)
    u[k - 1] = ray_step_backward<T>(weight(k - 1), weight(k), measure(k), killing(k), alpha, u[k], u[k + 1]);
  return u;
}

template <typename T>
struct GrowthCheck {
  bool holds = true;
  long first_failure = -1;  // steps after x
  std::vector<T> values;    // u(x−1), u(x), u(x+1), ...
};

/// On the unit ray (b ≡ 1, m ≡ 1, c ≡ 0) with u(x) ≥ 2/(2+α)·u(x−1), checks
/// u(x+j) ≥ (1+α/2)^j u(x) for j = 1..steps. At an exact crossing the bound
/// is attained with equality, so the comparison allows rounding of a few
/// ulps per step.
template <typename T>
GrowthCheck<T> check_ray_growth(const T& alpha, const T& u_prev, const T& u_x, long steps) {
  GrowthCheck<T> out;
  out.values = {u_prev, u_x};
  const T rate = T(1) + alpha / T(2);
  T bound = u_x;
  for (long j = 1; j <= steps; ++j) {
    const std::size_t k = out.values.size() - 1;
    out.values.push_back((T(2) + alpha) * out.values[k] - out.values[k - 1]);
    bound = bound * rate;
    const T slack = T(8 * (j + 1)) * std::numeric_limits<T>::epsilon() * bound;
    if (out.holds && out.values.back() < bound - slack) {
      out.holds = false;
      out.first_failure = j;
    }
  }
  return out;
}

}  // namespace dfg
