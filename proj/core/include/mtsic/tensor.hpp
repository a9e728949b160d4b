#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "mtsic/common.hpp"

namespace mtsic {

template <typename S>
class GradTape;

template <typename S>
struct TensorStorage {
  std::vector<S> data;
  std::vector<S> grad;  // stays empty until a backward pass reaches this leaf
};

// Dense row-major tensor handle over shared storage. Copying a Tensor is
// shallow (both handles see the same values); clone() deep-copies. A handle
// produced by a differentiable op under a GradTape carries the tape node that
// computed it; detach() drops that link. Handles must not outlive the tape
// they are bound to.
template <typename S>
class Tensor {
 public:
  using Scalar = S;

  Tensor() = default;

  explicit Tensor(std::vector<int> shape)
      : st_(std::make_shared<TensorStorage<S>>()), shape_(std::move(shape)) {
    st_->data.assign((size_t)shape_numel(shape_), S(0));
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<int> shape, S value) {
    Tensor t(std::move(shape));
    for (S& v : t.st_->data) v = value;
    return t;
  }

  static Tensor from_data(std::vector<int> shape, std::vector<S> values) {
    Tensor t;
    t.shape_ = std::move(shape);
    if ((int64_t)values.size() != shape_numel(t.shape_))
      throw std::invalid_argument("from_data: " + std::to_string(values.size()) +
                                  " values for shape " + shape_str(t.shape_));
    t.st_ = std::make_shared<TensorStorage<S>>();
    t.st_->data = std::move(values);
    return t;
  }

  bool defined() const { return st_ != nullptr; }
  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return (int)shape_.size(); }

  int dim(int i) const {
    if (i < 0 || i >= rank()) throw std::invalid_argument("dim index out of range");
    return shape_[(size_t)i];
  }

  int64_t size() const { return st_ ? (int64_t)st_->data.size() : 0; }

  S* data() { return st_->data.data(); }
  const S* data() const { return st_->data.data(); }

  // bounds-checked element access, mostly for tests and small setup code
  S& at(std::vector<int> idx) { return st_->data[(size_t)offset(idx)]; }
  S at(std::vector<int> idx) const { return st_->data[(size_t)offset(idx)]; }

  bool requires_grad() const { return requires_grad_; }
  Tensor& set_requires_grad(bool v) {
    requires_grad_ = v;
    return *this;
  }

  bool has_grad() const { return st_ && !st_->grad.empty(); }

  // gradient buffer, allocated (zeroed) on first use
  S* grad() {
    if (st_->grad.empty()) st_->grad.assign(st_->data.size(), S(0));
    return st_->grad.data();
  }
  const S* grad_data() const { return st_->grad.empty() ? nullptr : st_->grad.data(); }

  void zero_grad() {
    if (st_) st_->grad.assign(st_->data.size(), S(0));
  }

  // same storage, no tape link, no grad requirement
  Tensor detach() const {
    Tensor t;
    t.st_ = st_;
    t.shape_ = shape_;
    return t;
  }

  // deep copy of the values only
  Tensor clone() const {
    Tensor t;
    t.shape_ = shape_;
    t.st_ = std::make_shared<TensorStorage<S>>();
    t.st_->data = st_->data;
    return t;
  }

  // same storage and tape node under a different shape (numel must match)
  Tensor reshape(std::vector<int> new_shape) const {
    if (shape_numel(new_shape) != size())
      throw std::invalid_argument("reshape: " + shape_str(shape_) + " -> " +
                                  shape_str(new_shape) + " changes element count");
    Tensor t = *this;
    t.shape_ = std::move(new_shape);
    return t;
  }

  // --- wiring used by ops and the tape ---
  const std::shared_ptr<TensorStorage<S>>& storage() const { return st_; }
  GradTape<S>* tape() const { return tape_; }
  int node() const { return node_; }
  void bind(GradTape<S>* tape, int node) {
    tape_ = tape;
    node_ = node;
  }

 private:
  int64_t offset(const std::vector<int>& idx) const {
    if ((int)idx.size() != rank()) throw std::invalid_argument("at: rank mismatch");
    int64_t off = 0;
    for (int i = 0; i < rank(); ++i) {
      if (idx[(size_t)i] < 0 || idx[(size_t)i] >= shape_[(size_t)i])
        throw std::invalid_argument("at: index out of bounds");
      off = off * shape_[(size_t)i] + idx[(size_t)i];
    }
    return off;
  }

  std::shared_ptr<TensorStorage<S>> st_;
  std::vector<int> shape_;
  GradTape<S>* tape_ = nullptr;
  int node_ = -1;
  bool requires_grad_ = false;
};

// Reverse-mode tape. Ops append nodes during the forward pass; backward()
// walks the nodes once in reverse and accumulates gradients, finishing by
// adding leaf gradients into the leaf tensors' grad buffers. A tape supports
// exactly one backward pass; build a new tape for the next step.
template <typename S>
class GradTape {
 public:
  using BackwardFn = std::function<void(GradTape&, const S*)>;

  GradTape() = default;
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  // Register a tensor as an op input. Returns the node whose buffer the op's
  // backward should accumulate into, or -1 if the value is constant under
  // this tape. A requires_grad tensor not produced on this tape becomes a
  // leaf; repeated uses map to the same leaf node.
  int track(const Tensor<S>& t);

  // Append an op node. The callback receives this tape and the node's
  // accumulated output gradient (length out_size).
  int emit(int64_t out_size, BackwardFn fn);

  // accumulation buffer for a node, allocated zeroed on first request
  S* grad_acc(int node);
  bool grad_present(int node) const;

  // Run reverse accumulation from a scalar loss produced on this tape.
  void backward(const Tensor<S>& loss);

  bool consumed() const { return consumed_; }
  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    BackwardFn backward;  // empty for leaves
    std::vector<S> grad;
    int64_t size = 0;
    std::shared_ptr<TensorStorage<S>> leaf;  // set for leaf nodes only
  };

  void check_open() const {
    if (consumed_)
      throw std::runtime_error("grad tape already consumed by backward(); use a fresh tape");
  }

  std::vector<Node> nodes_;
  std::unordered_map<const TensorStorage<S>*, int> leaf_index_;
  bool consumed_ = false;
};

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class GradTape<float>;
extern template class GradTape<double>;

}  // namespace mtsic
