#include "mtsic/wavelet.hpp"

#include <stdexcept>

#include "mtsic/common.hpp"

namespace mtsic {
namespace {

// subband sign patterns over the 2x2 block (a, b, c, d), all scaled by 1/2
constexpr int kSigns[4][4] = {
    {1, 1, 1, 1},    // ll
    {1, -1, 1, -1},  // lh
    {1, 1, -1, -1},  // hl
    {1, -1, -1, 1},  // hh
};

}  // namespace

template <typename S>
WaveletPyramid<S> haar_dwt2(const Tensor<S>& x, GradTape<S>* tape) {
  if (x.rank() != 3)
    throw std::invalid_argument("haar_dwt2: expected C x H x W, got " + shape_str(x.shape()));
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  if (H % 2 != 0 || W % 2 != 0)
    throw std::invalid_argument("haar_dwt2: extents must be even, got " + shape_str(x.shape()));
  const int h2 = H / 2, w2 = W / 2;
  const int64_t hw = (int64_t)H * W;
  const int64_t shw = (int64_t)h2 * w2;

  WaveletPyramid<S> p{Tensor<S>({C, h2, w2}), Tensor<S>({C, h2, w2}), Tensor<S>({C, h2, w2}),
                      Tensor<S>({C, h2, w2})};
  Tensor<S>* bands[4] = {&p.ll, &p.lh, &p.hl, &p.hh};
  const S* xd = x.data();
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < h2; ++i) {
      const S* r0 = xd + c * hw + (int64_t)(2 * i) * W;
      const S* r1 = r0 + W;
      for (int j = 0; j < w2; ++j) {
        const S a = r0[2 * j], b = r0[2 * j + 1], cc = r1[2 * j], d = r1[2 * j + 1];
        const S blk[4] = {a, b, cc, d};
        for (int s = 0; s < 4; ++s) {
          S acc = 0;
          for (int q = 0; q < 4; ++q) acc += S(kSigns[s][q]) * blk[q];
          bands[s]->data()[c * shw + (int64_t)i * w2 + j] = acc / S(2);
        }
      }
    }
  }

  if (tape) {
    int xn = tape->track(x);
    if (xn >= 0) {
      for (int s = 0; s < 4; ++s) {
        int yn = tape->emit(shw * C, [xn, s, C, H, W, h2, w2, hw, shw](GradTape<S>& t,
                                                                       const S* g) {
          S* gx = t.grad_acc(xn);
          for (int c = 0; c < C; ++c) {
            for (int i = 0; i < h2; ++i) {
              S* r0 = gx + c * hw + (int64_t)(2 * i) * W;
              S* r1 = r0 + W;
              for (int j = 0; j < w2; ++j) {
                const S gv = g[c * shw + (int64_t)i * w2 + j] / S(2);
                r0[2 * j] += S(kSigns[s][0]) * gv;
                r0[2 * j + 1] += S(kSigns[s][1]) * gv;
                r1[2 * j] += S(kSigns[s][2]) * gv;
                r1[2 * j + 1] += S(kSigns[s][3]) * gv;
              }
            }
          }
        });
        bands[s]->bind(tape, yn);
      }
    }
  }
  return p;
}

template <typename S>
Tensor<S> haar_idwt2(const WaveletPyramid<S>& p, GradTape<S>* tape) {
  const Tensor<S>* bands[4] = {&p.ll, &p.lh, &p.hl, &p.hh};
  for (const Tensor<S>* b : bands) {
    if (!b->defined() || b->rank() != 3)
      throw std::invalid_argument("haar_idwt2: all subbands must be defined C x H x W tensors");
    if (b->shape() != p.ll.shape())
      throw std::invalid_argument("haar_idwt2: subband shape mismatch, " +
                                  shape_str(b->shape()) + " vs " + shape_str(p.ll.shape()));
  }
  const int C = p.ll.dim(0), h2 = p.ll.dim(1), w2 = p.ll.dim(2);
  const int H = 2 * h2, W = 2 * w2;
  const int64_t hw = (int64_t)H * W;
  const int64_t shw = (int64_t)h2 * w2;

  Tensor<S> y({C, H, W});
  S* yd = y.data();
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < h2; ++i) {
      S* r0 = yd + c * hw + (int64_t)(2 * i) * W;
      S* r1 = r0 + W;
      for (int j = 0; j < w2; ++j) {
        S sub[4];
        for (int s = 0; s < 4; ++s) sub[s] = bands[s]->data()[c * shw + (int64_t)i * w2 + j];
        // block entry q recombines the subbands with the same sign pattern
        S blk[4];
        for (int q = 0; q < 4; ++q) {
          S acc = 0;
          for (int s = 0; s < 4; ++s) acc += S(kSigns[s][q]) * sub[s];
          blk[q] = acc / S(2);
        }
        r0[2 * j] = blk[0];
        r0[2 * j + 1] = blk[1];
        r1[2 * j] = blk[2];
        r1[2 * j + 1] = blk[3];
      }
    }
  }

  if (tape) {
    int nodes[4];
    bool any = false;
    for (int s = 0; s < 4; ++s) {
      nodes[s] = tape->track(*bands[s]);
      any = any || nodes[s] >= 0;
    }
    if (any) {
      int yn = tape->emit(y.size(), [nodes, C, H, W, h2, w2, hw, shw](GradTape<S>& t,
                                                                      const S* g) {
        int n0 = nodes[0], n1 = nodes[1], n2 = nodes[2], n3 = nodes[3];
        S* gb[4] = {n0 >= 0 ? t.grad_acc(n0) : nullptr, n1 >= 0 ? t.grad_acc(n1) : nullptr,
                    n2 >= 0 ? t.grad_acc(n2) : nullptr, n3 >= 0 ? t.grad_acc(n3) : nullptr};
        for (int c = 0; c < C; ++c) {
          for (int i = 0; i < h2; ++i) {
            const S* r0 = g + c * hw + (int64_t)(2 * i) * W;
            const S* r1 = r0 + W;
            for (int j = 0; j < w2; ++j) {
              const S gq[4] = {r0[2 * j], r0[2 * j + 1], r1[2 * j], r1[2 * j + 1]};
              for (int s = 0; s < 4; ++s) {
                if (!gb[s]) continue;
                S acc = 0;
                for (int q = 0; q < 4; ++q) acc += S(kSigns[s][q]) * gq[q];
                gb[s][c * shw + (int64_t)i * w2 + j] += acc / S(2);
              }
            }
          }
        }
      });
      y.bind(tape, yn);
    }
  }
  return y;
}

template struct WaveletPyramid<float>;
template struct WaveletPyramid<double>;
template WaveletPyramid<float> haar_dwt2<float>(const Tensor<float>&, GradTape<float>*);
template WaveletPyramid<double> haar_dwt2<double>(const Tensor<double>&, GradTape<double>*);
template Tensor<float> haar_idwt2<float>(const WaveletPyramid<float>&, GradTape<float>*);
template Tensor<double> haar_idwt2<double>(const WaveletPyramid<double>&, GradTape<double>*);

}  // namespace mtsic
