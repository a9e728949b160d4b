#include "mtsic/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mtsic/objectives.hpp"
#include "mtsic/ops.hpp"

namespace mtsic {

namespace {

template <typename S>
void check_pair(const Tensor<S>& a, const Tensor<S>& b) {
  if (!a.defined() || !b.defined())
    throw std::invalid_argument("metric: undefined tensor");
  if (a.shape() != b.shape())
    throw std::invalid_argument("metric: shape mismatch");
  if (a.rank() != 3) throw std::invalid_argument("metric: expected rank-3 image");
}

}  // namespace

template <typename S>
double psnr(const Tensor<S>& gen, const Tensor<S>& gt, double range) {
  check_pair(gen, gt);
  const S* g = gen.data();
  const S* t = gt.data();
  double mse = 0;
  for (int64_t i = 0; i < gen.size(); ++i) {
    double d = double(g[i]) - double(t[i]);
    mse += d * d;
  }
  mse /= double(gen.size());
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(range * range / mse);
}

template <typename S>
double ssim_metric(const Tensor<S>& gen, const Tensor<S>& gt, double range) {
  check_pair(gen, gt);
  Tensor<S> m = ssim_mean<S>(gen, gt, S(range), nullptr);
  return double(m.data()[0]);
}

template <typename S>
double uiqi(const Tensor<S>& gen, const Tensor<S>& gt, int window) {
  check_pair(gen, gt);
  const int C = int(gen.dim(0)), H = int(gen.dim(1)), W = int(gen.dim(2));
  if (window < 1 || window > H || window > W)
    throw std::invalid_argument("uiqi: window larger than image");
  const double eps = 1e-12;
  const double n = double(window) * double(window);
  double sum = 0;
  int64_t count = 0;
  for (int c = 0; c < C; ++c) {
    const S* x = gen.data() + int64_t(c) * H * W;
    const S* y = gt.data() + int64_t(c) * H * W;
    for (int i = 0; i + window <= H; ++i) {
      for (int j = 0; j + window <= W; ++j) {
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        for (int a = 0; a < window; ++a) {
          const S* xr = x + int64_t(i + a) * W + j;
          const S* yr = y + int64_t(i + a) * W + j;
          for (int b = 0; b < window; ++b) {
            double xv = double(xr[b]), yv = double(yr[b]);
            sx += xv;
            sy += yv;
            sxx += xv * xv;
            syy += yv * yv;
            sxy += xv * yv;
          }
        }
        double mx = sx / n, my = sy / n;
        double vx = sxx / n - mx * mx;
        double vy = syy / n - my * my;
        double cov = sxy / n - mx * my;
        double q = (4.0 * cov * mx * my + eps) /
                   ((vx + vy) * (mx * mx + my * my) + eps);
        sum += q;
        ++count;
      }
    }
  }
  return sum / double(count);
}

template <typename S>
double colorful(const Tensor<S>& img) {
  if (!img.defined() || img.rank() != 3 || img.dim(0) != 3)
    throw std::invalid_argument("colorful: expected {3,H,W} image");
  const int64_t hw = img.dim(1) * img.dim(2);
  const S* r = img.data();
  const S* g = r + hw;
  const S* b = g + hw;
  double s_rg = 0, s_yb = 0, ss_rg = 0, ss_yb = 0;
  for (int64_t i = 0; i < hw; ++i) {
    double rg = double(r[i]) - double(g[i]);
    double yb = 0.5 * (double(r[i]) + double(g[i])) - double(b[i]);
    s_rg += rg;
    s_yb += yb;
    ss_rg += rg * rg;
    ss_yb += yb * yb;
  }
  double m_rg = s_rg / double(hw), m_yb = s_yb / double(hw);
  double v_rg = ss_rg / double(hw) - m_rg * m_rg;
  double v_yb = ss_yb / double(hw) - m_yb * m_yb;
  if (v_rg < 0) v_rg = 0;
  if (v_yb < 0) v_yb = 0;
  return std::sqrt(v_rg + v_yb) +
         0.3 * std::sqrt(m_rg * m_rg + m_yb * m_yb);
}

template <typename S>
ColorHistogram color_histogram(const Tensor<S>& img, int bins) {
  if (!img.defined() || img.rank() != 3 || img.dim(0) != 3)
    throw std::invalid_argument("color_histogram: expected {3,H,W} image");
  if (bins < 1) throw std::invalid_argument("color_histogram: bins must be positive");
  ColorHistogram h;
  h.bins = bins;
  h.p.assign(size_t(bins) * bins * bins, 0.0);
  const int64_t hw = img.dim(1) * img.dim(2);
  const S* r = img.data();
  const S* g = r + hw;
  const S* b = g + hw;
  auto bin_of = [bins](double v) {
    int k = int(v * bins);
    if (k < 0) k = 0;
    if (k >= bins) k = bins - 1;
    return k;
  };
  for (int64_t i = 0; i < hw; ++i) {
    int kr = bin_of(double(r[i]));
    int kg = bin_of(double(g[i]));
    int kb = bin_of(double(b[i]));
    h.p[(size_t(kr) * bins + kg) * bins + kb] += 1.0;
  }
  const double eps = 1e-12;
  double total = 0;
  for (double& v : h.p) {
    v += eps;
    total += v;
  }
  for (double& v : h.p) v /= total;
  return h;
}

double colorjsd(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size())
    throw std::invalid_argument("colorjsd: distribution sizes disagree");
  auto kl = [](const std::vector<double>& a, const std::vector<double>& m) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i)
      if (a[i] > 0 && m[i] > 0) s += a[i] * std::log2(a[i] / m[i]);
    return s;
  };
  std::vector<double> m(p.size());
  for (size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  double d = 0.5 * kl(p, m) + 0.5 * kl(q, m);
  if (d < 0) d = 0;
  if (d > 1) d = 1;
  return d;
}

double colorjsd(const ColorHistogram& p, const ColorHistogram& q) {
  if (p.bins != q.bins)
    throw std::invalid_argument("colorjsd: histogram bin counts disagree");
  return colorjsd(p.p, q.p);
}

template <typename S>
MetricRow metric_row(const Tensor<S>& gen, const Tensor<S>& gt) {
  MetricRow row;
  row.psnr = psnr(gen, gt, 1.0);
  row.ssim = ssim_metric(gen, gt, 1.0);
  row.uiqi = uiqi(gen, gt);
  row.colorful = colorful(gen);
  row.colorjsd = colorjsd(color_histogram(gen), color_histogram(gt));
  return row;
}

MetricRow aggregate_rows(const std::vector<MetricRow>& rows) {
  MetricRow agg;
  if (rows.empty()) return agg;
  for (const MetricRow& r : rows) {
    agg.psnr += r.psnr;
    agg.ssim += r.ssim;
    agg.uiqi += r.uiqi;
    agg.colorful += r.colorful;
    agg.colorjsd += r.colorjsd;
  }
  double n = double(rows.size());
  agg.psnr /= n;
  agg.ssim /= n;
  agg.uiqi /= n;
  agg.colorful /= n;
  agg.colorjsd /= n;
  return agg;
}

template double psnr<float>(const Tensor<float>&, const Tensor<float>&, double);
template double psnr<double>(const Tensor<double>&, const Tensor<double>&, double);
template double ssim_metric<float>(const Tensor<float>&, const Tensor<float>&, double);
template double ssim_metric<double>(const Tensor<double>&, const Tensor<double>&, double);
template double uiqi<float>(const Tensor<float>&, const Tensor<float>&, int);
template double uiqi<double>(const Tensor<double>&, const Tensor<double>&, int);
template double colorful<float>(const Tensor<float>&);
template double colorful<double>(const Tensor<double>&);
template ColorHistogram color_histogram<float>(const Tensor<float>&, int);
template ColorHistogram color_histogram<double>(const Tensor<double>&, int);
template MetricRow metric_row<float>(const Tensor<float>&, const Tensor<float>&);
template MetricRow metric_row<double>(const Tensor<double>&, const Tensor<double>&);

}  // namespace mtsic
