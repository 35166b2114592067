#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_map>
#include <utility>
#include <vector>

namespace adalign {

// Dense row-major 2-D tensor. Scalars are {1,1}, row vectors {1,n}.
// Storage is shared: copies alias the same buffer, clone() deep-copies.
struct Tensor {
  std::vector<int> shape;
  std::shared_ptr<std::vector<double>> data;
  bool requires_grad = false;
  int node_id = -1;
  std::uint64_t tape_id = 0;

  Tensor();
  explicit Tensor(std::vector<int> s, double fill = 0.0);
  static Tensor from_values(std::vector<int> s, std::vector<double> v);

  std::size_t numel() const;
  int rows() const { return shape[0]; }
  int cols() const { return shape[1]; }
  double* ptr() { return data->data(); }
  const double* ptr() const { return data->data(); }
  double& at(int i, int j) { return (*data)[static_cast<std::size_t>(i) * shape[1] + j]; }
  double at(int i, int j) const { return (*data)[static_cast<std::size_t>(i) * shape[1] + j]; }

  // Deep copy, detached from any tape.
  Tensor clone() const;
};

// Compressed sparse row matrix. Treated as a constant by every op.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;
  std::vector<int> col_idx;
  std::vector<double> values;
};

class Tape;

class GradientMap {
 public:
  // Gradient for a leaf registered on the tape that produced this map.
  // Leaves the objective never touched get exact zeros.
  const Tensor& wrt(const Tensor& leaf) const;

 private:
  friend class Tape;
  std::uint64_t tape_id_ = 0;
  std::unordered_map<int, Tensor> grads_;
};

// Define-by-run reverse-mode tape. Build a fresh one per training step,
// register parameters with leaf(), run ops, then call backward() once.
class Tape {
 public:
  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers a differentiable leaf. The returned tensor shares storage
  // with the argument, so in-place parameter updates stay visible.
  Tensor leaf(const Tensor& value);

  // Reverse sweep from a scalar loss. Freezes the tape; callable once.
  GradientMap backward(const Tensor& loss);

  bool frozen() const { return frozen_; }
  std::size_t size() const { return nodes_.size(); }
  std::uint64_t id() const { return id_; }

  // Recording interface used by the op implementations.
  int record(const std::vector<int>& shape, bool is_leaf,
             std::function<void(Tape&, int)> backward_fn);
  double* grad_accum(int node_id);
  const std::vector<double>* grad_of(int node_id) const;

 private:
  struct Node {
    std::function<void(Tape&, int)> fn;
    std::vector<int> shape;
    std::size_t numel = 0;
    bool is_leaf = false;
  };

  std::vector<Node> nodes_;
  std::vector<std::unique_ptr<std::vector<double>>> grads_;
  bool frozen_ = false;
  std::uint64_t id_ = 0;
};

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sparse_dense_matmul(Tape& tape, const SparseMatrix& s, const Tensor& x);
Tensor transpose(Tape& tape, const Tensor& a);
Tensor reshape(Tape& tape, const Tensor& a, std::vector<int> shape);
// add/elementwise_mul accept equal shapes, or b as a {1,n} row vector
// broadcast over the rows of a.
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor elementwise_mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scalar_mul(Tape& tape, double c, const Tensor& a);
Tensor relu(Tape& tape, const Tensor& a);
Tensor exp(Tape& tape, const Tensor& a);
Tensor cos(Tape& tape, const Tensor& a);
Tensor sin(Tape& tape, const Tensor& a);
// One trig pass for both outputs; backward reuses the captured buffers.
std::pair<Tensor, Tensor> cos_sin(Tape& tape, const Tensor& a);
// sqrt(x + 1e-12); rejects negative inputs.
Tensor sqrt_eps(Tape& tape, const Tensor& a);
Tensor sum_all(Tape& tape, const Tensor& a);
Tensor mean_all(Tape& tape, const Tensor& a);
// Column means of a {m,n} tensor, result {1,n}.
Tensor mean_rows(Tape& tape, const Tensor& a);
Tensor log_softmax_rows(Tape& tape, const Tensor& a);
Tensor gather_rows(Tape& tape, const Tensor& a, const std::vector<int>& idx);
Tensor concat_rows(Tape& tape, const Tensor& a, const Tensor& b);

// Max relative error |analytic - central_difference| / max(1, |analytic|)
// over all coordinates of x. f receives a leaf already on the tape and
// must return a scalar.
double grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                  const Tensor& x, double step);

}  // namespace adalign
