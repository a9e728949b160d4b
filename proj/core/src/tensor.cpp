#include "mtsic/tensor.hpp"

namespace mtsic {

template <typename S>
int GradTape<S>::track(const Tensor<S>& t) {
  check_open();
  if (!t.defined()) throw std::invalid_argument("track: undefined tensor");
  if (t.tape() == this && t.node() >= 0) return t.node();
  if (t.tape() != nullptr && t.tape() != this)
    throw std::runtime_error("tensor is bound to a different grad tape");
  if (!t.requires_grad()) return -1;
  auto it = leaf_index_.find(t.storage().get());
  if (it != leaf_index_.end()) return it->second;
  Node n;
  n.size = t.size();
  n.leaf = t.storage();
  int id = (int)nodes_.size();
  nodes_.push_back(std::move(n));
  leaf_index_.emplace(t.storage().get(), id);
  return id;
}

template <typename S>
int GradTape<S>::emit(int64_t out_size, BackwardFn fn) {
  check_open();
  Node n;
  n.size = out_size;
  n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return (int)nodes_.size() - 1;
}

template <typename S>
S* GradTape<S>::grad_acc(int node) {
  Node& n = nodes_[(size_t)node];
  if (n.grad.empty()) n.grad.assign((size_t)n.size, S(0));
  return n.grad.data();
}

template <typename S>
bool GradTape<S>::grad_present(int node) const {
  return node >= 0 && !nodes_[(size_t)node].grad.empty();
}

template <typename S>
void GradTape<S>::backward(const Tensor<S>& loss) {
  check_open();
  if (loss.tape() != this || loss.node() < 0)
    throw std::invalid_argument("backward: loss was not produced on this tape");
  if (loss.size() != 1) throw std::invalid_argument("backward: loss must be a scalar");
  consumed_ = true;  // even a throwing backward leaves the tape unusable
  grad_acc(loss.node())[0] = S(1);
  for (int i = (int)nodes_.size() - 1; i >= 0; --i) {
    Node& n = nodes_[(size_t)i];
    if (n.backward && !n.grad.empty()) n.backward(*this, n.grad.data());
  }
  // flush leaf gradients into the tensors themselves
  for (Node& n : nodes_) {
    if (!n.leaf || n.grad.empty()) continue;
    std::vector<S>& g = n.leaf->grad;
    if (g.empty()) g.assign(n.leaf->data.size(), S(0));
    for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
  }
  nodes_.clear();
  leaf_index_.clear();
}

template class Tensor<float>;
template class Tensor<double>;
template class GradTape<float>;
template class GradTape<double>;

}  // namespace mtsic
