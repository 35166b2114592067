#include "adalign/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <string>

#include "adalign/errors.hpp"
#include "adalign/fastmath.hpp"

namespace adalign {

namespace {

std::size_t numel_of(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

void check_shape(const std::vector<int>& shape) {
  if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0)
    throw DimensionError("tensor shape must be 2-D with non-negative dims");
}

void check_input(const Tape& tape, const Tensor& t, const char* op) {
  if (t.requires_grad && (t.node_id < 0 || t.tape_id != tape.id()))
    throw ContractError(std::string(op) +
                        ": input requires grad but is not registered on this tape");
}

// C(m,n) += A(m,k) * B(k,n)
void mm_nn(double* __restrict c, const double* __restrict a,
           const double* __restrict b, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    const double* ai = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      double av = ai[p];
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C(m,k) += G(m,n) * B(k,n)^T
void mm_nt_accum(double* __restrict c, const double* __restrict g,
                 const double* __restrict b, int m, int n, int k) {
  for (int i = 0; i < m; ++i) {
    const double* gi = g + static_cast<std::size_t>(i) * n;
    double* ci = c + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double* bp = b + static_cast<std::size_t>(p) * n;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += gi[j] * bp[j];
      ci[p] += acc;
    }
  }
}

// C(k,n) += A(m,k)^T * G(m,n)
void mm_tn_accum(double* __restrict c, const double* __restrict a,
                 const double* __restrict g, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    const double* gi = g + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      double av = ai[p];
      double* cp = c + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) cp[j] += av * gi[j];
    }
  }
}

}  // namespace

Tensor::Tensor() : shape{0, 0}, data(std::make_shared<std::vector<double>>()) {}

Tensor::Tensor(std::vector<int> s, double fill) : shape(std::move(s)) {
  check_shape(shape);
  data = std::make_shared<std::vector<double>>(numel_of(shape), fill);
}

Tensor Tensor::from_values(std::vector<int> s, std::vector<double> v) {
  check_shape(s);
  if (numel_of(s) != v.size())
    throw DimensionError("from_values: element count does not match shape");
  Tensor t;
  t.shape = std::move(s);
  t.data = std::make_shared<std::vector<double>>(std::move(v));
  return t;
}

std::size_t Tensor::numel() const { return numel_of(shape); }

Tensor Tensor::clone() const {
  Tensor t;
  t.shape = shape;
  t.data = std::make_shared<std::vector<double>>(*data);
  return t;
}

const Tensor& GradientMap::wrt(const Tensor& leaf) const {
  if (leaf.node_id < 0 || leaf.tape_id != tape_id_)
    throw ContractError("wrt: tensor is not a leaf of the tape that produced this map");
  auto it = grads_.find(leaf.node_id);
  if (it == grads_.end())
    throw ContractError("wrt: tensor is not a leaf of the tape that produced this map");
  return it->second;
}

Tape::Tape() {
  static std::atomic<std::uint64_t> counter{1};
  id_ = counter.fetch_add(1);
}

int Tape::record(const std::vector<int>& shape, bool is_leaf,
                 std::function<void(Tape&, int)> backward_fn) {
  if (frozen_) throw ContractError("tape is frozen; build a fresh one per step");
  Node node;
  node.fn = std::move(backward_fn);
  node.shape = shape;
  node.numel = numel_of(shape);
  node.is_leaf = is_leaf;
  nodes_.push_back(std::move(node));
  grads_.push_back(nullptr);
  return static_cast<int>(nodes_.size()) - 1;
}

double* Tape::grad_accum(int node_id) {
  auto& slot = grads_[static_cast<std::size_t>(node_id)];
  if (!slot)
    slot = std::make_unique<std::vector<double>>(nodes_[static_cast<std::size_t>(node_id)].numel, 0.0);
  return slot->data();
}

const std::vector<double>* Tape::grad_of(int node_id) const {
  return grads_[static_cast<std::size_t>(node_id)].get();
}

Tensor Tape::leaf(const Tensor& value) {
  Tensor t;
  t.shape = value.shape;
  t.data = value.data;
  t.requires_grad = true;
  t.tape_id = id_;
  t.node_id = record(t.shape, true, nullptr);
  return t;
}

GradientMap Tape::backward(const Tensor& loss) {
  if (frozen_) throw ContractError("backward: tape already swept");
  if (!loss.requires_grad || loss.node_id < 0 || loss.tape_id != id_)
    throw ContractError("backward: loss is not recorded on this tape");
  if (loss.numel() != 1) throw DimensionError("backward: loss must be a scalar");
  frozen_ = true;

  grad_accum(loss.node_id)[0] = 1.0;
  for (int id = loss.node_id; id >= 0; --id) {
    auto& slot = grads_[static_cast<std::size_t>(id)];
    if (!slot) continue;
    Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.is_leaf) continue;
    node.fn(*this, id);
    slot.reset();
  }

  GradientMap map;
  map.tape_id_ = id_;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (!nodes_[id].is_leaf) continue;
    Tensor g(nodes_[id].shape, 0.0);
    if (grads_[id]) {
      *g.data = std::move(*grads_[id]);
      grads_[id].reset();
    }
    map.grads_.emplace(static_cast<int>(id), std::move(g));
  }
  for (auto& n : nodes_) n.fn = nullptr;
  return map;
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  check_input(tape, a, "matmul");
  check_input(tape, b, "matmul");
  if (a.shape[1] != b.shape[0]) throw DimensionError("matmul: inner dimensions differ");
  const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
  Tensor out({m, n});
  mm_nn(out.ptr(), a.ptr(), b.ptr(), m, k, n);
  if (a.requires_grad || b.requires_grad) {
    const int pa = a.requires_grad ? a.node_id : -1;
    const int pb = b.requires_grad ? b.node_id : -1;
    auto ad = a.data;
    auto bd = b.data;
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id = tape.record(out.shape, false, [pa, pb, ad, bd, m, k, n](Tape& t, int self) {
      const double* g = t.grad_of(self)->data();
      if (pa >= 0) mm_nt_accum(t.grad_accum(pa), g, bd->data(), m, n, k);
      if (pb >= 0) mm_tn_accum(t.grad_accum(pb), ad->data(), g, m, k, n);
    });
  }
  return out;
}

Tensor sparse_dense_matmul(Tape& tape, const SparseMatrix& s, const Tensor& x) {
  check_input(tape, x, "sparse_dense_matmul");
  if (s.row_ptr.size() != static_cast<std::size_t>(s.rows) + 1 ||
      s.col_idx.size() != s.values.size())
    throw ContractError("sparse_dense_matmul: malformed CSR matrix");
  if (s.cols != x.shape[0]) throw DimensionError("sparse_dense_matmul: inner dimensions differ");
  const int m = s.rows, n = x.shape[1];
  Tensor out({m, n});
  {
    double* o = out.ptr();
    const double* xd = x.ptr();
    for (int i = 0; i < m; ++i) {
      double* oi = o + static_cast<std::size_t>(i) * n;
      for (int e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e) {
        const double v = s.values[static_cast<std::size_t>(e)];
        const double* xr = xd + static_cast<std::size_t>(s.col_idx[static_cast<std::size_t>(e)]) * n;
        for (int j = 0; j < n; ++j) oi[j] += v * xr[j];
      }
    }
  }
  if (x.requires_grad) {
    const int px = x.node_id;
    // the CSR arrays stay owned by the caller; copy what backward needs
    auto row_ptr = std::make_shared<std::vector<int>>(s.row_ptr);
    auto col_idx = std::make_shared<std::vector<int>>(s.col_idx);
    auto values = std::make_shared<std::vector<double>>(s.values);
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id =
        tape.record(out.shape, false, [px, row_ptr, col_idx, values, m, n](Tape& t, int self) {
          const double* g = t.grad_of(self)->data();
          double* gx = t.grad_accum(px);
          for (int i = 0; i < m; ++i) {
            const double* gi = g + static_cast<std::size_t>(i) * n;
            for (int e = (*row_ptr)[i]; e < (*row_ptr)[i + 1]; ++e) {
              const double v = (*values)[static_cast<std::size_t>(e)];
              double* gr = gx + static_cast<std::size_t>((*col_idx)[static_cast<std::size_t>(e)]) * n;
              for (int j = 0; j < n; ++j) gr[j] += v * gi[j];
            }
          }
        });
  }
  return out;
}

Tensor transpose(Tape& tape, const Tensor& a) {
  check_input(tape, a, "transpose");
  const int m = a.shape[0], n = a.shape[1];
  Tensor out({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
  if (a.requires_grad) {
    const int pa = a.node_id;
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id = tape.record(out.shape, false, [pa, m, n](Tape& t, int self) {
      const double* g = t.grad_of(self)->data();
      double* ga = t.grad_accum(pa);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i)
          ga[static_cast<std::size_t>(i) * n + j] += g[static_cast<std::size_t>(j) * m + i];
    });
  }
  return out;
}

Tensor reshape(Tape& tape, const Tensor& a, std::vector<int> shape) {
  check_input(tape, a, "reshape");
  check_shape(shape);
  if (numel_of(shape) != a.numel())
    throw DimensionError("reshape: element count does not match new shape");
  Tensor out;
  out.shape = std::move(shape);
  out.data = a.data;
  if (a.requires_grad) {
    const int pa = a.node_id;
    const std::size_t count = a.numel();
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id = tape.record(out.shape, false, [pa, count](Tape& t, int self) {
      const double* g = t.grad_of(self)->data();
      double* ga = t.grad_accum(pa);
      for (std::size_t i = 0; i < count; ++i) ga[i] += g[i];
    });
  }
  return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  check_input(tape, a, "add");
  check_input(tape, b, "add");
  const bool same = a.shape == b.shape;
  const bool bcast = !same && b.shape[0] == 1 && a.shape[1] == b.shape[1];
  if (!same && !bcast) throw DimensionError("add: shapes incompatible");
  const int m = a.shape[0], n = a.shape[1];
  Tensor out(a.shape);
  {
    double* o = out.ptr();
    const double* ad = a.ptr();
    const double* bd = b.ptr();
    if (same) {
      for (std::size_t i = 0; i < out.numel(); ++i) o[i] = ad[i] + bd[i];
    } else {
      for (int i = 0; i < m; ++i) {
        const std::size_t off = static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) o[off + j] = ad[off + j] + bd[j];
      }
    }
  }
  if (a.requires_grad || b.requires_grad) {
    const int pa = a.requires_grad ? a.node_id : -1;
    const int pb = b.requires_grad ? b.node_id : -1;
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id = tape.record(out.shape, false, [pa, pb, same, m, n](Tape& t, int self) {
      const double* g = t.grad_of(self)->data();
      const std::size_t count = static_cast<std::size_t>(m) * n;
      if (pa >= 0) {
        double* ga = t.grad_accum(pa);
        for (std::size_t i = 0; i < count; ++i) ga[i] += g[i];
      }
      if (pb >= 0) {
        double* gb = t.grad_accum(pb);
        if (same) {
          for (std::size_t i = 0; i < count; ++i) gb[i] += g[i];
        } else {
          for (int i = 0; i < m; ++i) {
            const double* gi = g + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) gb[j] += gi[j];
          }
        }
      }
    });
  }
  return out;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  check_input(tape, a, "sub");
  check_input(tape, b, "sub");
  if (a.shape != b.shape) throw DimensionError("sub: shapes differ");
  Tensor out(a.shape);
  {
    double* o = out.ptr();
    const double* ad = a.ptr();
    const double* bd = b.ptr();
    for (std::size_t i = 0; i < out.numel(); ++i) o[i] = ad[i] - bd[i];
  }
  if (a.requires_grad || b.requires_grad) {
    const int pa = a.requires_grad ? a.node_id : -1;
    const int pb = b.requires_grad ? b.node_id : -1;
    const std::size_t count = out.numel();
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id = tape.record(out.shape, false, [pa, pb, count](Tape& t, int self) {
      const double* g = t.grad_of(self)->data();
      if (pa >= 0) {
        double* ga = t.grad_accum(pa);
        for (std::size_t i = 0; i < count; ++i) ga[i] += g[i];
      }
      if (pb >= 0) {
        double* gb = t.grad_accum(pb);
        for (std::size_t i = 0; i < count; ++i) gb[i] -= g[i];
      }
    });
  }
  return out;
}

Tensor elementwise_mul(Tape& tape, const Tensor& a, const Tensor& b) {
  check_input(tape, a, "elementwise_mul");
  check_input(tape, b, "elementwise_mul");
  const bool same = a.shape == b.shape;
  const bool bcast = !same && b.shape[0] == 1 && a.shape[1] == b.shape[1];
  if (!same && !bcast) throw DimensionError("elementwise_mul: shapes incompatible");
  const int m = a.shape[0], n = a.shape[1];
  Tensor out(a.shape);
  {
    double* o = out.ptr();
    const double* ad = a.ptr();
    const double* bd = b.ptr();
    if (same) {
      for (std::size_t i = 0; i < out.numel(); ++i) o[i] = ad[i] * bd[i];
    } else {
      for (int i = 0; i < m; ++i) {
        const std::size_t off = static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) o[off + j] = ad[off + j] * bd[j];
      }
    }
  }
  if (a.requires_grad || b.requires_grad) {
    const int pa = a.requires_grad ? a.node_id : -1;
    const int pb = b.requires_grad ? b.node_id : -1;
    auto ad = a.data;
    auto bd = b.data;
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id = tape.record(out.shape, false, [pa, pb, ad, bd, same, m, n](Tape& t, int self) {
      const double* g = t.grad_of(self)->data();
      const double* av = ad->data();
      const double* bv = bd->data();
      const std::size_t count = static_cast<std::size_t>(m) * n;
      if (pa >= 0) {
        double* ga = t.grad_accum(pa);
        if (same) {
          for (std::size_t i = 0; i < count; ++i) ga[i] += g[i] * bv[i];
        } else {
          for (int i = 0; i < m; ++i) {
            const std::size_t off = static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) ga[off + j] += g[off + j] * bv[j];
          }
        }
      }
      if (pb >= 0) {
        double* gb = t.grad_accum(pb);
        if (same) {
          for (std::size_t i = 0; i < count; ++i) gb[i] += g[i] * av[i];
        } else {
          for (int i = 0; i < m; ++i) {
            const std::size_t off = static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) gb[j] += g[off + j] * av[off + j];
          }
        }
      }
    });
  }
  return out;
}

Tensor scalar_mul(Tape& tape, double c, const Tensor& a) {
  check_input(tape, a, "scalar_mul");
  Tensor out(a.shape);
  {
    double* o = out.ptr();
    const double* ad = a.ptr();
    for (std::size_t i = 0; i < out.numel(); ++i) o[i] = c * ad[i];
  }
  if (a.requires_grad) {
    const int pa = a.node_id;
    const std::size_t count = out.numel();
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id = tape.record(out.shape, false, [pa, c, count](Tape& t, int self) {
      const double* g = t.grad_of(self)->data();
      double* ga = t.grad_accum(pa);
      for (std::size_t i = 0; i < count; ++i) ga[i] += c * g[i];
    });
  }
  return out;
}

Tensor relu(Tape& tape, const Tensor& a) {
  check_input(tape, a, "relu");
  Tensor out(a.shape);
  {
    double* o = out.ptr();
    const double* ad = a.ptr();
    for (std::size_t i = 0; i < out.numel(); ++i) o[i] = ad[i] > 0.0 ? ad[i] : 0.0;
  }
  if (a.requires_grad) {
    const int pa = a.node_id;
    auto ad = a.data;
    const std::size_t count = out.numel();
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id = tape.record(out.shape, false, [pa, ad, count](Tape& t, int self) {
      const double* g = t.grad_of(self)->data();
      const double* av = ad->data();
      double* ga = t.grad_accum(pa);
      for (std::size_t i = 0; i < count; ++i)
        if (av[i] > 0.0) ga[i] += g[i];
    });
  }
  return out;
}

Tensor exp(Tape& tape, const Tensor& a) {
  check_input(tape, a, "exp");
  Tensor out(a.shape);
  {
    double* o = out.ptr();
    const double* ad = a.ptr();
    for (std::size_t i = 0; i < out.numel(); ++i) o[i] = std::exp(ad[i]);
  }
  if (a.requires_grad) {
    const int pa = a.node_id;
    auto od = out.data;
    const std::size_t count = out.numel();
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id = tape.record(out.shape, false, [pa, od, count](Tape& t, int self) {
      const double* g = t.grad_of(self)->data();
      const double* ov = od->data();
      double* ga = t.grad_accum(pa);
      for (std::size_t i = 0; i < count; ++i) ga[i] += g[i] * ov[i];
    });
  }
  return out;
}

Tensor cos(Tape& tape, const Tensor& a) {
  check_input(tape, a, "cos");
  Tensor out(a.shape);
  auto sins = std::make_shared<std::vector<double>>(out.numel());
  sincos_array(a.ptr(), sins->data(), out.ptr(), out.numel());
  if (a.requires_grad) {
    const int pa = a.node_id;
    const std::size_t count = out.numel();
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id = tape.record(out.shape, false, [pa, sins, count](Tape& t, int self) {
      const double* g = t.grad_of(self)->data();
      const double* sv = sins->data();
      double* ga = t.grad_accum(pa);
      for (std::size_t i = 0; i < count; ++i) ga[i] -= g[i] * sv[i];
    });
  }
  return out;
}

Tensor sin(Tape& tape, const Tensor& a) {
  check_input(tape, a, "sin");
  Tensor out(a.shape);
  auto coss = std::make_shared<std::vector<double>>(out.numel());
  sincos_array(a.ptr(), out.ptr(), coss->data(), out.numel());
  if (a.requires_grad) {
    const int pa = a.node_id;
    const std::size_t count = out.numel();
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id = tape.record(out.shape, false, [pa, coss, count](Tape& t, int self) {
      const double* g = t.grad_of(self)->data();
      const double* cv = coss->data();
      double* ga = t.grad_accum(pa);
      for (std::size_t i = 0; i < count; ++i) ga[i] += g[i] * cv[i];
    });
  }
  return out;
}

std::pair<Tensor, Tensor> cos_sin(Tape& tape, const Tensor& a) {
  check_input(tape, a, "cos_sin");
  Tensor c(a.shape);
  Tensor s(a.shape);
  sincos_array(a.ptr(), s.ptr(), c.ptr(), a.numel());
  if (a.requires_grad) {
    const int pa = a.node_id;
    const std::size_t count = a.numel();
    auto cd = c.data;
    auto sd = s.data;
    c.requires_grad = true;
    c.tape_id = tape.id();
    c.node_id = tape.record(c.shape, false, [pa, sd, count](Tape& t, int self) {
      const double* g = t.grad_of(self)->data();
      const double* sv = sd->data();
      double* ga = t.grad_accum(pa);
      for (std::size_t i = 0; i < count; ++i) ga[i] -= g[i] * sv[i];
    });
    s.requires_grad = true;
    s.tape_id = tape.id();
    s.node_id = tape.record(s.shape, false, [pa, cd, count](Tape& t, int self) {
      const double* g = t.grad_of(self)->data();
      const double* cv = cd->data();
      double* ga = t.grad_accum(pa);
      for (std::size_t i = 0; i < count; ++i) ga[i] += g[i] * cv[i];
    });
  }
  return {c, s};
}

Tensor sqrt_eps(Tape& tape, const Tensor& a) {
  check_input(tape, a, "sqrt_eps");
  constexpr double kEps = 1e-12;
  Tensor out(a.shape);
  {
    double* o = out.ptr();
    const double* ad = a.ptr();
    for (std::size_t i = 0; i < out.numel(); ++i) {
      if (ad[i] < 0.0) throw DomainError("sqrt_eps: negative input");
      o[i] = std::sqrt(ad[i] + kEps);
    }
  }
  if (a.requires_grad) {
    const int pa = a.node_id;
    auto od = out.data;
    const std::size_t count = out.numel();
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id = tape.record(out.shape, false, [pa, od, count](Tape& t, int self) {
      const double* g = t.grad_of(self)->data();
      const double* ov = od->data();
      double* ga = t.grad_accum(pa);
      for (std::size_t i = 0; i < count; ++i) ga[i] += 0.5 * g[i] / ov[i];
    });
  }
  return out;
}

Tensor sum_all(Tape& tape, const Tensor& a) {
  check_input(tape, a, "sum_all");
  double acc = 0.0;
  const double* ad = a.ptr();
  for (std::size_t i = 0; i < a.numel(); ++i) acc += ad[i];
  Tensor out({1, 1}, acc);
  if (a.requires_grad) {
    const int pa = a.node_id;
    const std::size_t count = a.numel();
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id = tape.record(out.shape, false, [pa, count](Tape& t, int self) {
      const double g = (*t.grad_of(self))[0];
      double* ga = t.grad_accum(pa);
      for (std::size_t i = 0; i < count; ++i) ga[i] += g;
    });
  }
  return out;
}

Tensor mean_all(Tape& tape, const Tensor& a) {
  check_input(tape, a, "mean_all");
  if (a.numel() == 0) throw DimensionError("mean_all: empty tensor");
  double acc = 0.0;
  const double* ad = a.ptr();
  for (std::size_t i = 0; i < a.numel(); ++i) acc += ad[i];
  Tensor out({1, 1}, acc / static_cast<double>(a.numel()));
  if (a.requires_grad) {
    const int pa = a.node_id;
    const std::size_t count = a.numel();
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id = tape.record(out.shape, false, [pa, count](Tape& t, int self) {
      const double g = (*t.grad_of(self))[0] / static_cast<double>(count);
      double* ga = t.grad_accum(pa);
      for (std::size_t i = 0; i < count; ++i) ga[i] += g;
    });
  }
  return out;
}

Tensor mean_rows(Tape& tape, const Tensor& a) {
  check_input(tape, a, "mean_rows");
  const int m = a.shape[0], n = a.shape[1];
  if (m == 0) throw DimensionError("mean_rows: no rows");
  Tensor out({1, n});
  {
    double* o = out.ptr();
    const double* ad = a.ptr();
    for (int i = 0; i < m; ++i) {
      const double* ai = ad + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) o[j] += ai[j];
    }
    const double inv = 1.0 / static_cast<double>(m);
    for (int j = 0; j < n; ++j) o[j] *= inv;
  }
  if (a.requires_grad) {
    const int pa = a.node_id;
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id = tape.record(out.shape, false, [pa, m, n](Tape& t, int self) {
      const double* g = t.grad_of(self)->data();
      double* ga = t.grad_accum(pa);
      const double inv = 1.0 / static_cast<double>(m);
      for (int i = 0; i < m; ++i) {
        double* gi = ga + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) gi[j] += g[j] * inv;
      }
    });
  }
  return out;
}

Tensor log_softmax_rows(Tape& tape, const Tensor& a) {
  check_input(tape, a, "log_softmax_rows");
  const int m = a.shape[0], n = a.shape[1];
  if (n == 0) throw DimensionError("log_softmax_rows: no columns");
  Tensor out(a.shape);
  {
    double* o = out.ptr();
    const double* ad = a.ptr();
    for (int i = 0; i < m; ++i) {
      const double* ai = ad + static_cast<std::size_t>(i) * n;
      double* oi = o + static_cast<std::size_t>(i) * n;
      double mx = ai[0];
      for (int j = 1; j < n; ++j) mx = std::max(mx, ai[j]);
      double sum = 0.0;
      for (int j = 0; j < n; ++j) sum += std::exp(ai[j] - mx);
      const double lse = mx + std::log(sum);
      for (int j = 0; j < n; ++j) oi[j] = ai[j] - lse;
    }
  }
  if (a.requires_grad) {
    const int pa = a.node_id;
    auto od = out.data;
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id = tape.record(out.shape, false, [pa, od, m, n](Tape& t, int self) {
      const double* g = t.grad_of(self)->data();
      const double* ov = od->data();
      double* ga = t.grad_accum(pa);
      for (int i = 0; i < m; ++i) {
        const std::size_t off = static_cast<std::size_t>(i) * n;
        double gs = 0.0;
        for (int j = 0; j < n; ++j) gs += g[off + j];
        for (int j = 0; j < n; ++j) ga[off + j] += g[off + j] - std::exp(ov[off + j]) * gs;
      }
    });
  }
  return out;
}

Tensor gather_rows(Tape& tape, const Tensor& a, const std::vector<int>& idx) {
  check_input(tape, a, "gather_rows");
  const int m = a.shape[0], n = a.shape[1];
  for (int i : idx)
    if (i < 0 || i >= m) throw RangeError("gather_rows: row index out of range");
  const int r = static_cast<int>(idx.size());
  Tensor out({r, n});
  {
    double* o = out.ptr();
    const double* ad = a.ptr();
    for (int i = 0; i < r; ++i)
      std::memcpy(o + static_cast<std::size_t>(i) * n,
                  ad + static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]) * n,
                  sizeof(double) * static_cast<std::size_t>(n));
  }
  if (a.requires_grad) {
    const int pa = a.node_id;
    auto keep = std::make_shared<std::vector<int>>(idx);
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id = tape.record(out.shape, false, [pa, keep, r, n](Tape& t, int self) {
      const double* g = t.grad_of(self)->data();
      double* ga = t.grad_accum(pa);
      for (int i = 0; i < r; ++i) {
        const double* gi = g + static_cast<std::size_t>(i) * n;
        double* gr = ga + static_cast<std::size_t>((*keep)[static_cast<std::size_t>(i)]) * n;
        for (int j = 0; j < n; ++j) gr[j] += gi[j];
      }
    });
  }
  return out;
}

Tensor concat_rows(Tape& tape, const Tensor& a, const Tensor& b) {
  check_input(tape, a, "concat_rows");
  check_input(tape, b, "concat_rows");
  if (a.shape[1] != b.shape[1]) throw DimensionError("concat_rows: column counts differ");
  const int ma = a.shape[0], mb = b.shape[0], n = a.shape[1];
  Tensor out({ma + mb, n});
  std::memcpy(out.ptr(), a.ptr(), sizeof(double) * a.numel());
  std::memcpy(out.ptr() + a.numel(), b.ptr(), sizeof(double) * b.numel());
  if (a.requires_grad || b.requires_grad) {
    const int pa = a.requires_grad ? a.node_id : -1;
    const int pb = b.requires_grad ? b.node_id : -1;
    out.requires_grad = true;
    out.tape_id = tape.id();
    out.node_id = tape.record(out.shape, false, [pa, pb, ma, mb, n](Tape& t, int self) {
      const double* g = t.grad_of(self)->data();
      const std::size_t na = static_cast<std::size_t>(ma) * n;
      const std::size_t nb = static_cast<std::size_t>(mb) * n;
      if (pa >= 0) {
        double* ga = t.grad_accum(pa);
        for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
      }
      if (pb >= 0) {
        double* gb = t.grad_accum(pb);
        for (std::size_t i = 0; i < nb; ++i) gb[i] += g[na + i];
      }
    });
  }
  return out;
}

double grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                  const Tensor& x, double step) {
  Tensor base = x.clone();
  Tape tape;
  Tensor xl = tape.leaf(base);
  Tensor loss = f(tape, xl);
  if (loss.numel() != 1) throw DimensionError("grad_check: objective must be a scalar");
  GradientMap grads = tape.backward(loss);
  const Tensor& g = grads.wrt(xl);

  auto eval = [&](std::size_t i, double v) {
    Tensor xp = base.clone();
    (*xp.data)[i] = v;
    Tape t;
    Tensor lf = t.leaf(xp);
    Tensor l = f(t, lf);
    if (l.numel() != 1) throw DimensionError("grad_check: objective must be a scalar");
    return (*l.data)[0];
  };

  double worst = 0.0;
  for (std::size_t i = 0; i < base.numel(); ++i) {
    const double v0 = (*base.data)[i];
    const double fd = (eval(i, v0 + step) - eval(i, v0 - step)) / (2.0 * step);
    const double an = (*g.data)[i];
    const double err = std::fabs(an - fd) / std::max(1.0, std::fabs(an));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace adalign
