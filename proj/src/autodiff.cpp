#include "pressmap/autodiff.hpp"

#include <atomic>
#include <cmath>

#include "pressmap/error.hpp"

namespace pressmap::ad {

namespace {

std::atomic<bool> g_fault_injection{false};

void require_same_shape(Var a, Var b, const char* op) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": " + shape_string(a.shape()) + " vs " +
                                              shape_string(b.shape()));
  }
}

void require_rank(Var a, std::size_t rank, const char* op) {
  if (a.value().rank() != rank) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_string(a.shape()));
  }
}

// Elementwise unary op from value and local derivative functions.
template <typename F, typename D>
Var unary(Var a, F f, D df) {
  const Tensor& x = a.value();
  Tensor out(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return a.tape->record(std::move(out), {a}, [a, df](Tape& t, const Tensor& y, const Tensor& gy) {
    Tensor& ga = t.grad(a);
    const Tensor& x = t.value(a);
    for (std::size_t i = 0; i < x.size(); ++i) ga[i] += gy[i] * df(x[i], y[i]);
  });
}

}  // namespace

void set_fault_injection(bool enabled) { g_fault_injection = enabled; }
bool fault_injection() { return g_fault_injection; }

Var Tape::push(Tensor value, bool requires_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), Tensor(), requires_grad, std::move(backward)});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(Tensor value, std::span<const Var> parents, Backward backward) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape != this) throw Error(ErrorCode::ShapeMismatch, "operands belong to different tapes");
    needs = needs || nodes_[p.id].requires_grad;
  }
  return push(std::move(value), needs, needs ? std::move(backward) : Backward{});
}

Tensor& Tape::grad(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.data.size() != n.value.size()) n.grad = Tensor(n.value.shape);
  return n.grad;
}

void Tape::backward(Var out) {
  if (value(out).size() != 1) throw Error(ErrorCode::ShapeMismatch, "backward() needs a single-element output");
  backward(out, Tensor(value(out).shape, 1.0));
}

void Tape::backward(Var out, const Tensor& seed) {
  if (seed.shape != value(out).shape) throw Error(ErrorCode::ShapeMismatch, "seed shape differs from output");
  Tensor& g = grad(out);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += seed[i];
  for (int i = out.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.data.empty()) continue;
    n.backward(*this, n.value, n.grad);
  }
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, const Tensor& gy) {
    if (Tensor* ga = t.grad_if_needed(a))
      for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i];
    if (Tensor* gb = t.grad_if_needed(b))
      for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] += gy[i];
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, const Tensor& gy) {
    if (Tensor* ga = t.grad_if_needed(a))
      for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i];
    if (Tensor* gb = t.grad_if_needed(b))
      for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] -= gy[i];
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, const Tensor& gy) {
    if (Tensor* ga = t.grad_if_needed(a))
      for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * t.value(b)[i];
    if (Tensor* gb = t.grad_if_needed(b))
      for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] += gy[i] * t.value(a)[i];
  });
}

Var scale(Var a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var abs(Var a) {
  return unary(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var sum(Var a) {
  double s = 0.0;
  for (double x : a.value().data) s += x;
  return a.tape->record(Tensor({1}, s), {a}, [a](Tape& t, const Tensor&, const Tensor& gy) {
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[0];
  });
}

Var mean(Var a) {
  if (a.size() == 0) throw Error(ErrorCode::ShapeMismatch, "mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Var dense(Var x, Var weight, Var bias) {
  require_rank(x, 2, "dense");
  require_rank(weight, 2, "dense");
  const std::size_t n = x.shape()[0], in = x.shape()[1], outw = weight.shape()[1];
  if (weight.shape()[0] != in || bias.shape() != Shape{outw}) {
    throw Error(ErrorCode::ShapeMismatch, "dense: x " + shape_string(x.shape()) + ", W " +
                                              shape_string(weight.shape()) + ", b " + shape_string(bias.shape()));
  }
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using CMap = Eigen::Map<const RowMat>;
  Tensor out({n, outw});
  Eigen::Map<RowMat> y(out.data.data(), n, outw);
  y.noalias() = CMap(x.value().data.data(), n, in) * CMap(weight.value().data.data(), in, outw);
  y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.value().data.data(), outw);
  return x.tape->record(std::move(out), {x, weight, bias},
                        [x, weight, bias, n, in, outw](Tape& t, const Tensor&, const Tensor& gy) {
                          const CMap g(gy.data.data(), n, outw);
                          if (Tensor* gx = t.grad_if_needed(x)) {
                            Eigen::Map<RowMat>(gx->data.data(), n, in).noalias() +=
                                g * CMap(t.value(weight).data.data(), in, outw).transpose();
                          }
                          if (Tensor* gw = t.grad_if_needed(weight)) {
                            Eigen::Map<RowMat> gwm(gw->data.data(), in, outw);
                            gwm.noalias() += CMap(t.value(x).data.data(), n, in).transpose() * g;
                            if (fault_injection()) gwm *= 1.01;
                          }
                          if (Tensor* gb = t.grad_if_needed(bias)) {
                            Eigen::Map<Eigen::RowVectorXd>(gb->data.data(), outw) += g.colwise().sum();
                          }
                        });
}

Var conv2d(Var x, Var weight, Var bias, int stride, int pad) {
  require_rank(x, 3, "conv2d");
  require_rank(weight, 4, "conv2d");
  const int cin = static_cast<int>(x.shape()[0]), h = static_cast<int>(x.shape()[1]),
            w = static_cast<int>(x.shape()[2]);
  const int cout = static_cast<int>(weight.shape()[0]), k = static_cast<int>(weight.shape()[2]);
  if (static_cast<int>(weight.shape()[1]) != cin || static_cast<int>(weight.shape()[3]) != k ||
      bias.shape() != Shape{static_cast<std::size_t>(cout)} || stride < 1 || pad < 0) {
    throw Error(ErrorCode::ShapeMismatch, "conv2d: x " + shape_string(x.shape()) + ", W " +
                                              shape_string(weight.shape()) + ", b " + shape_string(bias.shape()));
  }
  const int ho = (h + 2 * pad - k) / stride + 1;
  const int wo = (w + 2 * pad - k) / stride + 1;
  if (ho <= 0 || wo <= 0) throw Error(ErrorCode::ShapeMismatch, "conv2d: kernel larger than padded input");
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const int rows = cin * k * k, cols = ho * wo;

  // Column matrix [(cin k k) x (ho wo)]; padding entries stay zero.
  auto im2col = [=](const Tensor& xv) {
    RowMat col = RowMat::Zero(rows, cols);
    for (int ci = 0; ci < cin; ++ci)
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          double* dst = col.row((ci * k + ky) * k + kx).data();
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) continue;
            const double* src = &xv.data[(static_cast<std::size_t>(ci) * h + iy) * w];
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride - pad + kx;
              if (ix >= 0 && ix < w) dst[oy * wo + ox] = src[ix];
            }
          }
        }
    return col;
  };

  const RowMat col = im2col(x.value());
  Tensor out({static_cast<std::size_t>(cout), static_cast<std::size_t>(ho), static_cast<std::size_t>(wo)});
  Eigen::Map<RowMat> y(out.data.data(), cout, cols);
  y.noalias() = Eigen::Map<const RowMat>(weight.value().data.data(), cout, rows) * col;
  y.colwise() += Eigen::Map<const Eigen::VectorXd>(bias.value().data.data(), cout);
  return x.tape->record(
      std::move(out), {x, weight, bias},
      [x, weight, bias, im2col, cin, h, w, cout, k, ho, wo, rows, cols, stride, pad](Tape& t, const Tensor&,
                                                                                     const Tensor& gy) {
        const Eigen::Map<const RowMat> g(gy.data.data(), cout, cols);
        if (Tensor* gb = t.grad_if_needed(bias)) {
          Eigen::Map<Eigen::VectorXd>(gb->data.data(), cout) += g.rowwise().sum();
        }
        if (Tensor* gw = t.grad_if_needed(weight)) {
          Eigen::Map<RowMat>(gw->data.data(), cout, rows).noalias() += g * im2col(t.value(x)).transpose();
        }
        if (Tensor* gx = t.grad_if_needed(x)) {
          const RowMat gcol = Eigen::Map<const RowMat>(t.value(weight).data.data(), cout, rows).transpose() * g;
          for (int ci = 0; ci < cin; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const double* src = gcol.row((ci * k + ky) * k + kx).data();
                for (int oy = 0; oy < ho; ++oy) {
                  const int iy = oy * stride - pad + ky;
                  if (iy < 0 || iy >= h) continue;
                  double* dst = &gx->data[(static_cast<std::size_t>(ci) * h + iy) * w];
                  for (int ox = 0; ox < wo; ++ox) {
                    const int ix = ox * stride - pad + kx;
                    if (ix >= 0 && ix < w) dst[ix] += src[oy * wo + ox];
                  }
                }
              }
        }
      });
}

Var global_avg_pool(Var x) {
  require_rank(x, 3, "global_avg_pool");
  const std::size_t c = x.shape()[0], hw = x.shape()[1] * x.shape()[2];
  Tensor out({c});
  for (std::size_t ch = 0; ch < c; ++ch) {
    double s = 0.0;
    for (std::size_t i = 0; i < hw; ++i) s += x.value()[ch * hw + i];
    out[ch] = s / static_cast<double>(hw);
  }
  return x.tape->record(std::move(out), {x}, [x, c, hw](Tape& t, const Tensor&, const Tensor& gy) {
    Tensor& gx = t.grad(x);
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < hw; ++i) gx[ch * hw + i] += gy[ch] / static_cast<double>(hw);
  });
}

Var max_pool_rows(Var x) {
  require_rank(x, 2, "max_pool_rows");
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  if (n == 0) throw Error(ErrorCode::ShapeMismatch, "max_pool_rows: no rows");
  Tensor out({d});
  std::vector<std::size_t> arg(d, 0);
  for (std::size_t j = 0; j < d; ++j) {
    out[j] = x.value().at(0, j);
    for (std::size_t i = 1; i < n; ++i) {
      if (x.value().at(i, j) > out[j]) {
        out[j] = x.value().at(i, j);
        arg[j] = i;
      }
    }
  }
  return x.tape->record(std::move(out), {x}, [x, d, arg](Tape& t, const Tensor&, const Tensor& gy) {
    Tensor& gx = t.grad(x);
    for (std::size_t j = 0; j < d; ++j) gx.at(arg[j], j) += gy[j];
  });
}

Var row_norms(Var x) {
  require_rank(x, 2, "row_norms");
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  Tensor out({n});
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += x.value().at(i, j) * x.value().at(i, j);
    out[i] = std::sqrt(s);
  }
  return x.tape->record(std::move(out), {x}, [x, n, d](Tape& t, const Tensor& y, const Tensor& gy) {
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < n; ++i) {
      if (y[i] == 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) gx.at(i, j) += gy[i] * t.value(x).at(i, j) / y[i];
    }
  });
}

Var concat_cols(Var a, Var b) {
  require_rank(a, 2, "concat_cols");
  require_rank(b, 2, "concat_cols");
  const std::size_t n = a.shape()[0], p = a.shape()[1], q = b.shape()[1];
  if (b.shape()[0] != n) throw Error(ErrorCode::ShapeMismatch, "concat_cols: row counts differ");
  Tensor out({n, p + q});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) out.at(i, j) = a.value().at(i, j);
    for (std::size_t j = 0; j < q; ++j) out.at(i, p + j) = b.value().at(i, j);
  }
  return a.tape->record(std::move(out), {a, b}, [a, b, n, p, q](Tape& t, const Tensor&, const Tensor& gy) {
    if (Tensor* ga = t.grad_if_needed(a))
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) ga->at(i, j) += gy.at(i, j);
    if (Tensor* gb = t.grad_if_needed(b))
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < q; ++j) gb->at(i, j) += gy.at(i, p + j);
  });
}

Var broadcast_rows(Var v, std::size_t n) {
  require_rank(v, 1, "broadcast_rows");
  const std::size_t d = v.shape()[0];
  Tensor out({n, d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out.at(i, j) = v.value()[j];
  return v.tape->record(std::move(out), {v}, [v, n, d](Tape& t, const Tensor&, const Tensor& gy) {
    Tensor& gv = t.grad(v);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) gv[j] += gy.at(i, j);
  });
}

Var slice_rows(Var x, std::size_t start, std::size_t len) {
  require_rank(x, 2, "slice_rows");
  const std::size_t d = x.shape()[1];
  if (start + len > x.shape()[0]) throw Error(ErrorCode::ShapeMismatch, "slice_rows out of range");
  Tensor out({len, d});
  std::copy_n(x.value().data.begin() + static_cast<std::ptrdiff_t>(start * d), len * d, out.data.begin());
  return x.tape->record(std::move(out), {x}, [x, start, d](Tape& t, const Tensor&, const Tensor& gy) {
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[start * d + i] += gy[i];
  });
}

Var slice_cols(Var x, std::size_t start, std::size_t len) {
  require_rank(x, 2, "slice_cols");
  const std::size_t n = x.shape()[0];
  if (start + len > x.shape()[1]) throw Error(ErrorCode::ShapeMismatch, "slice_cols out of range");
  Tensor out({n, len});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < len; ++j) out.at(i, j) = x.value().at(i, start + j);
  return x.tape->record(std::move(out), {x}, [x, start, n, len](Tape& t, const Tensor&, const Tensor& gy) {
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < len; ++j) gx.at(i, start + j) += gy.at(i, j);
  });
}

Var slice(Var x, std::size_t start, std::size_t len) {
  if (start + len > x.size()) throw Error(ErrorCode::ShapeMismatch, "slice out of range");
  Tensor out({len});
  std::copy_n(x.value().data.begin() + static_cast<std::ptrdiff_t>(start), len, out.data.begin());
  return x.tape->record(std::move(out), {x}, [x, start](Tape& t, const Tensor&, const Tensor& gy) {
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[start + i] += gy[i];
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorCode::ShapeMismatch, "concat of nothing");
  std::vector<double> data;
  for (const Var& p : parts) data.insert(data.end(), p.value().data.begin(), p.value().data.end());
  const std::size_t total = data.size();
  std::vector<Var> ps(parts.begin(), parts.end());
  return parts[0].tape->record(Tensor({total}, std::move(data)), parts,
                               [ps](Tape& t, const Tensor&, const Tensor& gy) {
                                 std::size_t off = 0;
                                 for (const Var& p : ps) {
                                   const std::size_t n = t.value(p).size();
                                   if (Tensor* gp = t.grad_if_needed(p))
                                     for (std::size_t i = 0; i < n; ++i) (*gp)[i] += gy[off + i];
                                   off += n;
                                 }
                               });
}

Var reshape(Var x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw Error(ErrorCode::ShapeMismatch, "reshape " + shape_string(x.shape()) + " to " + shape_string(shape));
  }
  Tensor out;
  out.shape = std::move(shape);
  out.data = x.value().data;
  return x.tape->record(std::move(out), {x}, [x](Tape& t, const Tensor&, const Tensor& gy) {
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
  });
}

Var gather(Var feature_map, const Eigen::MatrixX2i& pix) {
  require_rank(feature_map, 3, "gather");
  const std::size_t c = feature_map.shape()[0], h = feature_map.shape()[1], w = feature_map.shape()[2];
  const std::size_t n = static_cast<std::size_t>(pix.rows());
  for (Eigen::Index v = 0; v < pix.rows(); ++v) {
    if (pix(v, 0) < 0 || pix(v, 1) < 0 || static_cast<std::size_t>(pix(v, 0)) >= h ||
        static_cast<std::size_t>(pix(v, 1)) >= w) {
      throw Error(ErrorCode::IndexOutOfRange, "gather: pixel index of vertex " + std::to_string(v));
    }
  }
  Tensor out({n, c});
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t ch = 0; ch < c; ++ch)
      out.at(v, ch) = feature_map.value().at(ch, static_cast<std::size_t>(pix(v, 0)), static_cast<std::size_t>(pix(v, 1)));
  return feature_map.tape->record(std::move(out), {feature_map},
                                  [feature_map, pix, n, c](Tape& t, const Tensor&, const Tensor& gy) {
                                    Tensor& gf = t.grad(feature_map);
                                    for (std::size_t v = 0; v < n; ++v)
                                      for (std::size_t ch = 0; ch < c; ++ch)
                                        gf.at(ch, static_cast<std::size_t>(pix(v, 0)),
                                              static_cast<std::size_t>(pix(v, 1))) += gy.at(v, ch);
                                  });
}

Var pose_mesh(Var psi, const BodyModel& model) {
  if (psi.size() != static_cast<std::size_t>(kNumParams)) {
    throw Error(ErrorCode::DimensionMismatch, "pose_mesh expects " + std::to_string(kNumParams) + " parameters");
  }
  const BodyParams params = BodyParams::unflatten(psi.value().data);
  const PosedMesh mesh = pressmap::pose_mesh(model, params);
  const std::size_t nv = static_cast<std::size_t>(mesh.vertices.rows());
  const std::size_t nj = static_cast<std::size_t>(mesh.joints.rows());
  Tensor out({nv + nj, 3});
  std::copy_n(mesh.vertices.data(), nv * 3, out.data.begin());
  std::copy_n(mesh.joints.data(), nj * 3, out.data.begin() + static_cast<std::ptrdiff_t>(nv * 3));
  const BodyModel* m = &model;
  return psi.tape->record(std::move(out), {psi}, [psi, m, nv, nj](Tape& t, const Tensor&, const Tensor& gy) {
    const BodyParams params = BodyParams::unflatten(t.value(psi).data);
    const MatX3 gv = Eigen::Map<const MatX3>(gy.data.data(), static_cast<Eigen::Index>(nv), 3);
    const MatX3 gj = Eigen::Map<const MatX3>(gy.data.data() + nv * 3, static_cast<Eigen::Index>(nj), 3);
    const Eigen::VectorXd g = pressmap::pose_mesh_vjp(*m, params, gv, gj);
    Tensor& gp = t.grad(psi);
    for (int i = 0; i < kNumParams; ++i) gp[static_cast<std::size_t>(i)] += g[i];
  });
}

Var reproject_2d(Var pressure, const PosedMesh& mesh, const ImageGeometry& geom) {
  if (pressure.size() != static_cast<std::size_t>(mesh.num_vertices())) {
    throw Error(ErrorCode::DimensionMismatch, "reproject_2d: pressure length differs from vertex count");
  }
  const Eigen::Map<const Eigen::VectorXd> p(pressure.value().data.data(), mesh.num_vertices());
  const PressureImage img = pressmap::reproject_2d(p, mesh, geom);
  Tensor out({static_cast<std::size_t>(geom.rows), static_cast<std::size_t>(geom.cols)},
             std::vector<double>(img.values.data(), img.values.data() + img.values.size()));
  // Per-vertex adjoint weights depend only on the frozen mesh binning.
  const Eigen::VectorXi bins = bin_vertices(mesh.vertices, geom);
  std::vector<int> count(static_cast<std::size_t>(geom.rows * geom.cols), 0);
  for (Eigen::Index v = 0; v < bins.size(); ++v)
    if (bins[v] >= 0) ++count[static_cast<std::size_t>(bins[v])];
  return pressure.tape->record(std::move(out), {pressure}, [pressure, bins, count](Tape& t, const Tensor&, const Tensor& gy) {
    Tensor& gp = t.grad(pressure);
    for (Eigen::Index v = 0; v < bins.size(); ++v) {
      if (bins[v] < 0) continue;
      const auto b = static_cast<std::size_t>(bins[v]);
      gp[static_cast<std::size_t>(v)] += gy[b] / count[b];
    }
  });
}

}  // namespace pressmap::ad
