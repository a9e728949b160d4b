#pragma once

#include <functional>
#include <vector>

#include "mtsic/ops.hpp"
#include "mtsic/rng.hpp"

namespace mtsic {

// Central-difference check of one op (or op composition) f at x. The output
// is reduced to a scalar through a fixed random projection so non-scalar ops
// check too. Every component of x is perturbed. Returns
//   max_i |analytic_i - cd_i| / max(|analytic_i|, |cd_i|, 1e-8).
template <typename S>
S grad_check(const std::function<Tensor<S>(const Tensor<S>&, GradTape<S>*)>& f, const Tensor<S>& x,
             S eps, uint64_t seed = 0x5eed);

// Finite-difference spot check for composite blocks: loss() rebuilds a scalar
// graph from the current values of the given leaves; one analytic backward is
// compared against central differences at each leaf's largest-gradient
// component plus `samples`-1 random ones. Relative errors are measured
// against max(|analytic|, |cd|, floor); raise the floor for deep graphs
// where the finite-difference noise (~machine eps / step) exceeds the
// smallest true gradient components.
template <typename S>
S grad_check_leaves(const std::function<Tensor<S>(GradTape<S>*)>& loss,
                    const std::vector<Tensor<S>>& leaves, S eps, int samples,
                    uint64_t seed = 0x5eed, S floor = S(1e-8));

extern template float grad_check<float>(
    const std::function<Tensor<float>(const Tensor<float>&, GradTape<float>*)>&,
    const Tensor<float>&, float, uint64_t);
extern template double grad_check<double>(
    const std::function<Tensor<double>(const Tensor<double>&, GradTape<double>*)>&,
    const Tensor<double>&, double, uint64_t);
extern template float grad_check_leaves<float>(
    const std::function<Tensor<float>(GradTape<float>*)>&, const std::vector<Tensor<float>>&,
    float, int, uint64_t, float);
extern template double grad_check_leaves<double>(
    const std::function<Tensor<double>(GradTape<double>*)>&, const std::vector<Tensor<double>>&,
    double, int, uint64_t, double);

}  // namespace mtsic
