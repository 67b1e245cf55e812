#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dim {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

// One record of the dynamic compute graph. Parents are the op inputs; the
// backward rule reads this node's grad and accumulates into the parents.
struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

/// Dense row-major tensor of doubles with optional reverse-mode gradient.
///
/// A Tensor is a cheap handle: copies share the underlying storage and graph
/// node. Results of differentiable ops hold references to their inputs, so the
/// graph lives exactly as long as the tensors computed from it.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t extent(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  // Direct write access, for parameter initialisation, optimiser updates and
  // finite-difference probes. Writing into a tensor that already feeds a live
  // graph invalidates that graph's gradients.
  std::span<double> mutable_data();
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool has_grad() const;
  // Empty span when no gradient has been accumulated yet.
  std::span<const double> grad() const;
  void zero_grad();

  // Reverse-mode sweep from a single-element tensor. Every node is visited
  // once, in reverse topological order; gradients accumulate into leaves.
  void backward() const;

  // Value copy with no graph history.
  Tensor detach() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Ordered registry of the trainable (and frozen) tensors of a model.
class ParamSet {
 public:
  Tensor add(std::string name, Tensor tensor);
  const Tensor& get(const std::string& name) const;
  Tensor* find(const std::string& name);
  const Tensor* find(const std::string& name) const;

  std::vector<NamedTensor>& entries() { return entries_; }
  const std::vector<NamedTensor>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  void zero_grad();

 private:
  std::vector<NamedTensor> entries_;
};

}  // namespace dim
