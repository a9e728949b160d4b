#include "mtsic/gradcheck.hpp"

#include <cmath>

namespace mtsic {
namespace {

template <typename S>
double project(const Tensor<S>& out, const std::vector<S>& r) {
  double acc = 0;
  const S* d = out.data();
  for (size_t i = 0; i < r.size(); ++i) acc += (double)r[i] * (double)d[i];
  return acc;
}

}  // namespace

template <typename S>
S grad_check(const std::function<Tensor<S>(const Tensor<S>&, GradTape<S>*)>& f, const Tensor<S>& x,
             S eps, uint64_t seed) {
  // fixed projection weights over the output
  Tensor<S> probe = f(x.clone(), nullptr);
  Rng rng(seed);
  std::vector<S> r((size_t)probe.size());
  for (S& v : r) v = S(rng.uniform(-1.0, 1.0));

  // analytic gradient of sum(r . f(x))
  Tensor<S> xg = x.clone();
  xg.set_requires_grad(true);
  GradTape<S> tape;
  Tensor<S> out = f(xg, &tape);
  Tensor<S> rt = Tensor<S>::from_data(out.shape(), r);
  Tensor<S> loss = sum_all(mul(out, rt, &tape), &tape);
  tape.backward(loss);
  std::vector<S> analytic(xg.grad(), xg.grad() + xg.size());

  // central differences, one component at a time
  double worst = 0;
  Tensor<S> xp = x.clone();
  S* d = xp.data();
  for (int64_t i = 0; i < x.size(); ++i) {
    const S keep = d[i];
    d[i] = keep + eps;
    const double lp = project(f(xp, nullptr), r);
    d[i] = keep - eps;
    const double lm = project(f(xp, nullptr), r);
    d[i] = keep;
    const double cd = (lp - lm) / (2.0 * (double)eps);
    const double a = (double)analytic[(size_t)i];
    const double err =
        std::abs(a - cd) / std::max(std::max(std::abs(a), std::abs(cd)), 1e-8);
    if (err > worst) worst = err;
  }
  return S(worst);
}

template <typename S>
S grad_check_leaves(const std::function<Tensor<S>(GradTape<S>*)>& loss,
                    const std::vector<Tensor<S>>& leaves, S eps, int samples, uint64_t seed,
                    S floor) {
  for (const Tensor<S>& l : leaves)
    if (!l.requires_grad())
      throw std::invalid_argument("grad_check_leaves: every leaf must require grad");
  std::vector<Tensor<S>> ls = leaves;
  for (Tensor<S>& l : ls) l.zero_grad();
  {
    GradTape<S> tape;
    Tensor<S> L = loss(&tape);
    if (L.size() != 1) throw std::invalid_argument("grad_check_leaves: loss must be scalar");
    tape.backward(L);
  }
  Rng rng(seed);
  double worst = 0;
  for (Tensor<S>& l : ls) {
    const int64_t n = l.size();
    const int m = samples < n ? samples : (int)n;
    // the first probe is always the component with the largest analytic
    // gradient, so every leaf's dominant pathway gets checked; the rest are
    // random. The floor keeps components whose true gradient sits below the
    // finite-difference noise from dominating the report.
    int64_t imax = 0;
    for (int64_t i = 1; i < n; ++i)
      if (std::abs((double)l.grad()[i]) > std::abs((double)l.grad()[imax])) imax = i;
    for (int s = 0; s < m; ++s) {
      const int64_t i =
          s == 0 ? imax : (samples < n ? (int64_t)rng.uniform_int((int)n) : s);
      S* d = l.data();
      const S keep = d[i];
      d[i] = keep + eps;
      const double lp = (double)loss(nullptr).data()[0];
      d[i] = keep - eps;
      const double lm = (double)loss(nullptr).data()[0];
      d[i] = keep;
      const double cd = (lp - lm) / (2.0 * (double)eps);
      const double a = (double)l.grad()[i];
      const double err =
          std::abs(a - cd) / std::max(std::max(std::abs(a), std::abs(cd)), (double)floor);
      if (err > worst) worst = err;
    }
  }
  return S(worst);
}

template float grad_check<float>(
    const std::function<Tensor<float>(const Tensor<float>&, GradTape<float>*)>&,
    const Tensor<float>&, float, uint64_t);
template double grad_check<double>(
    const std::function<Tensor<double>(const Tensor<double>&, GradTape<double>*)>&,
    const Tensor<double>&, double, uint64_t);
template float grad_check_leaves<float>(const std::function<Tensor<float>(GradTape<float>*)>&,
                                        const std::vector<Tensor<float>>&, float, int, uint64_t,
                                        float);
template double grad_check_leaves<double>(const std::function<Tensor<double>(GradTape<double>*)>&,
                                          const std::vector<Tensor<double>>&, double, int,
                                          uint64_t, double);

}  // namespace mtsic
