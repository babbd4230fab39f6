#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "pressmap/body_model.hpp"
#include "pressmap/projection.hpp"
#include "pressmap/tensor.hpp"

namespace pressmap::ad {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape; }
  std::size_t size() const { return value().size(); }
};

// Reverse-mode tape. Nodes are appended in evaluation order, so reverse
// insertion order is a valid topological order for backward.
class Tape {
 public:
  // Receives the output value and its accumulated gradient.
  using Backward = std::function<void(Tape&, const Tensor& out, const Tensor& out_grad)>;

  Var constant(Tensor value) { return push(std::move(value), false, {}); }
  Var variable(Tensor value) { return push(std::move(value), true, {}); }

  // Records an op output. The output needs a gradient iff some parent does;
  // otherwise `backward` is dropped.
  Var record(Tensor value, std::span<const Var> parents, Backward backward);
  Var record(Tensor value, std::initializer_list<Var> parents, Backward backward) {
    return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(backward));
  }

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  // Zero-filled on first access.
  Tensor& grad(Var v);
  // Gradient accumulator, or nullptr when v does not need a gradient.
  Tensor* grad_if_needed(Var v) { return requires_grad(v) ? &grad(v) : nullptr; }
  bool has_grad(Var v) const { return !nodes_[v.id].grad.data.empty(); }

  // Seeds d(out)/d(out) = 1 for a single-element output and runs backward.
  void backward(Var out);
  // Seeds an arbitrary cotangent with the output's shape.
  void backward(Var out, const Tensor& seed);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Tensor value, bool requires_grad, Backward backward);

  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->value(*this); }

// Elementwise, identical shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var relu(Var a);
Var sigmoid(Var a);
Var log(Var a);
Var abs(Var a);
Var square(Var a);
// Gradient is zero outside [lo, hi].
Var clamp(Var a, double lo, double hi);

Var sum(Var a);
Var mean(Var a);

// [N x in] * [in x out] + [out] -> [N x out].
Var dense(Var x, Var weight, Var bias);
// [Cin x H x W] with weight [Cout x Cin x k x k], bias [Cout], zero padding.
Var conv2d(Var x, Var weight, Var bias, int stride, int pad);
// [C x H x W] -> [C].
Var global_avg_pool(Var x);
// [N x D] -> [D], gradient routed to the first maximal row.
Var max_pool_rows(Var x);
// Euclidean norm of each row of [N x D] -> [N]; zero rows get zero gradient.
Var row_norms(Var x);
// [N x p], [N x q] -> [N x (p+q)].
Var concat_cols(Var a, Var b);
// [D] -> [N x D].
Var broadcast_rows(Var v, std::size_t n);
// Rows [start, start+len) of a 2D tensor.
Var slice_rows(Var x, std::size_t start, std::size_t len);
// Columns [start, start+len) of a 2D tensor.
Var slice_cols(Var x, std::size_t start, std::size_t len);
// Flat elements [start, start+len) -> [len].
Var slice(Var x, std::size_t start, std::size_t len);
Var concat(std::span<const Var> parts);  // flat concatenation -> [total]
Var reshape(Var x, Shape shape);

// [C x H x W] sampled at per-vertex (row, col) -> [N x C]; backward scatter-adds.
Var gather(Var feature_map, const Eigen::MatrixX2i& pix);

// Flattened body parameters [88] -> stacked posed vertices and joints [(N_v + N_j) x 3].
Var pose_mesh(Var psi, const BodyModel& model);
// Per-vertex pressure [N_v] -> reprojected image [rows x cols]; the mesh is a constant.
Var reproject_2d(Var pressure, const PosedMesh& mesh, const ImageGeometry& geom);

// Debug hook: when set, the dense VJP is deliberately perturbed so gradient checks must fail.
void set_fault_injection(bool enabled);
bool fault_injection();

}  // namespace pressmap::ad
