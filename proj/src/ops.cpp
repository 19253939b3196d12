#include "dscnn/ops.hpp"

#include "dscnn/error.hpp"

namespace dscnn::ag {

namespace {

void axpy(Matrix& into, const Matrix& delta, double factor = 1.0) {
  for (std::size_t i = 0; i < into.size(); ++i)
    into.data()[i] += factor * delta.data()[i];
}

}  // namespace

NodeId matmul(Tape& t, NodeId a, NodeId b) {
  Matrix value = dscnn::matmul(t.value(a), t.value(b));
  return t.push(std::move(value), {a, b}, [a, b](Tape& tp, NodeId out) {
    const Matrix& g = tp.grad_view(out);
    if (tp.needs_grad(a)) {
      axpy(tp.grad(a), dscnn::matmul(g, transpose(tp.value(b))));
    }
    if (tp.needs_grad(b)) {
      axpy(tp.grad(b), dscnn::matmul(transpose(tp.value(a)), g));
    }
  });
}

NodeId add(Tape& t, NodeId a, NodeId b) {
  Matrix value = dscnn::add(t.value(a), t.value(b));
  return t.push(std::move(value), {a, b}, [a, b](Tape& tp, NodeId out) {
    const Matrix& g = tp.grad_view(out);
    if (tp.needs_grad(a)) axpy(tp.grad(a), g);
    if (tp.needs_grad(b)) axpy(tp.grad(b), g);
  });
}

NodeId sub(Tape& t, NodeId a, NodeId b) {
  Matrix value = dscnn::sub(t.value(a), t.value(b));
  return t.push(std::move(value), {a, b}, [a, b](Tape& tp, NodeId out) {
    const Matrix& g = tp.grad_view(out);
    if (tp.needs_grad(a)) axpy(tp.grad(a), g);
    if (tp.needs_grad(b)) axpy(tp.grad(b), g, -1.0);
  });
}

NodeId hadamard(Tape& t, NodeId a, NodeId b) {
  Matrix value = dscnn::hadamard(t.value(a), t.value(b));
  return t.push(std::move(value), {a, b}, [a, b](Tape& tp, NodeId out) {
    const Matrix& g = tp.grad_view(out);
    if (tp.needs_grad(a)) axpy(tp.grad(a), dscnn::hadamard(g, tp.value(b)));
    if (tp.needs_grad(b)) axpy(tp.grad(b), dscnn::hadamard(g, tp.value(a)));
  });
}

NodeId scale(Tape& t, NodeId a, double factor) {
  Matrix value = dscnn::scale(t.value(a), factor);
  return t.push(std::move(value), {a}, [a, factor](Tape& tp, NodeId out) {
    if (tp.needs_grad(a)) axpy(tp.grad(a), tp.grad_view(out), factor);
  });
}

NodeId map(Tape& t, NodeId x, Nonlin fn) {
  Matrix value = map_elementwise(t.value(x), fn);
  return t.push(std::move(value), {x}, [x, fn](Tape& tp, NodeId out) {
    if (!tp.needs_grad(x)) return;
    const Matrix& g = tp.grad_view(out);
    const Matrix& pre = tp.value(x);
    const Matrix& post = tp.value(out);
    Matrix& gx = tp.grad(x);
    for (std::size_t i = 0; i < gx.size(); ++i) {
      gx.data()[i] += g.data()[i] * nonlin_derivative(fn, pre.data()[i],
                                                       post.data()[i]);
    }
  });
}

NodeId softmax(Tape& t, NodeId x) {
  Matrix value = dscnn::softmax(t.value(x));
  return t.push(std::move(value), {x}, [x](Tape& tp, NodeId out) {
    if (!tp.needs_grad(x)) return;
    const Matrix& g = tp.grad_view(out);
    const Matrix& y = tp.value(out);
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
      dot += g.data()[i] * y.data()[i];
    Matrix& gx = tp.grad(x);
    for (std::size_t i = 0; i < y.size(); ++i)
      gx.data()[i] += y.data()[i] * (g.data()[i] - dot);
  });
}

NodeId sum(Tape& t, NodeId x) {
  Matrix value(1, 1);
  value(0, 0) = dscnn::sum(t.value(x));
  return t.push(std::move(value), {x}, [x](Tape& tp, NodeId out) {
    if (!tp.needs_grad(x)) return;
    const double g = tp.grad_view(out)(0, 0);
    Matrix& gx = tp.grad(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx.data()[i] += g;
  });
}

NodeId affine(Tape& t, NodeId w, NodeId x, NodeId u, NodeId h, NodeId b) {
  const Matrix& wm = t.value(w);
  const Matrix& xm = t.value(x);
  const Matrix& um = t.value(u);
  const Matrix& hm = t.value(h);
  const Matrix& bm = t.value(b);
  if (wm.cols() != xm.rows() || um.cols() != hm.rows() ||
      wm.rows() != um.rows() || xm.cols() != 1 || hm.cols() != 1 ||
      bm.rows() != wm.rows() || bm.cols() != 1) {
    throw DimensionError("affine: incompatible shapes W " + wm.shape_str() +
                         ", x " + xm.shape_str() + ", U " + um.shape_str() +
                         ", h " + hm.shape_str() + ", b " + bm.shape_str());
  }
  Matrix value = dscnn::add(
      dscnn::add(dscnn::matmul(wm, xm), dscnn::matmul(um, hm)), bm);
  return t.push(std::move(value), {w, x, u, h, b},
                [w, x, u, h, b](Tape& tp, NodeId out) {
    const Matrix& g = tp.grad_view(out);
    if (tp.needs_grad(w)) axpy(tp.grad(w), dscnn::matmul(g, transpose(tp.value(x))));
    if (tp.needs_grad(x)) axpy(tp.grad(x), dscnn::matmul(transpose(tp.value(w)), g));
    if (tp.needs_grad(u)) axpy(tp.grad(u), dscnn::matmul(g, transpose(tp.value(h))));
    if (tp.needs_grad(h)) axpy(tp.grad(h), dscnn::matmul(transpose(tp.value(u)), g));
    if (tp.needs_grad(b)) axpy(tp.grad(b), g);
  });
}

NodeId affine_nb(Tape& t, NodeId w, NodeId x, NodeId b) {
  const Matrix& wm = t.value(w);
  const Matrix& xm = t.value(x);
  const Matrix& bm = t.value(b);
  if (wm.cols() != xm.rows() || xm.cols() != 1 || bm.rows() != wm.rows() ||
      bm.cols() != 1) {
    throw DimensionError("affine_nb: incompatible shapes W " + wm.shape_str() +
                         ", x " + xm.shape_str() + ", b " + bm.shape_str());
  }
  Matrix value = dscnn::add(dscnn::matmul(wm, xm), bm);
  return t.push(std::move(value), {w, x, b},
                [w, x, b](Tape& tp, NodeId out) {
    const Matrix& g = tp.grad_view(out);
    if (tp.needs_grad(w)) axpy(tp.grad(w), dscnn::matmul(g, transpose(tp.value(x))));
    if (tp.needs_grad(x)) axpy(tp.grad(x), dscnn::matmul(transpose(tp.value(w)), g));
    if (tp.needs_grad(b)) axpy(tp.grad(b), g);
  });
}

NodeId column(Tape& t, NodeId m, std::size_t j) {
  const Matrix& mm = t.value(m);
  if (j >= mm.cols()) throw DimensionError("column: index out of range");
  Matrix value(mm.rows(), 1);
  for (std::size_t i = 0; i < mm.rows(); ++i) value(i, 0) = mm(i, j);
  return t.push(std::move(value), {m}, [m, j](Tape& tp, NodeId out) {
    if (!tp.needs_grad(m)) return;
    const Matrix& g = tp.grad_view(out);
    Matrix& gm = tp.grad(m);
    for (std::size_t i = 0; i < g.rows(); ++i) gm(i, j) += g(i, 0);
  });
}

NodeId hstack(Tape& t, const std::vector<NodeId>& cols) {
  if (cols.empty()) throw DomainError("hstack: no columns");
  const std::size_t n = t.value(cols[0]).rows();
  Matrix value(n, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const Matrix& c = t.value(cols[j]);
    require_shape(c, n, 1, "hstack column");
    for (std::size_t i = 0; i < n; ++i) value(i, j) = c(i, 0);
  }
  return t.push(std::move(value), cols, [cols](Tape& tp, NodeId out) {
    const Matrix& g = tp.grad_view(out);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (!tp.needs_grad(cols[j])) continue;
      Matrix& gc = tp.grad(cols[j]);
      for (std::size_t i = 0; i < g.rows(); ++i) gc(i, 0) += g(i, j);
    }
  });
}

NodeId concat_rows(Tape& t, const std::vector<NodeId>& parts) {
  if (parts.empty()) throw DomainError("concat_rows: no parts");
  std::size_t total = 0;
  for (NodeId p : parts) {
    if (t.value(p).cols() != 1) {
      throw DimensionError("concat_rows: parts must be column vectors");
    }
    total += t.value(p).rows();
  }
  Matrix value(total, 1);
  std::size_t at = 0;
  for (NodeId p : parts) {
    const Matrix& v = t.value(p);
    for (std::size_t i = 0; i < v.rows(); ++i) value(at++, 0) = v(i, 0);
  }
  return t.push(std::move(value), parts, [parts](Tape& tp, NodeId out) {
    const Matrix& g = tp.grad_view(out);
    std::size_t at = 0;
    for (NodeId p : parts) {
      const std::size_t n = tp.value(p).rows();
      if (tp.needs_grad(p)) {
        Matrix& gp = tp.grad(p);
        for (std::size_t i = 0; i < n; ++i) gp(i, 0) += g(at + i, 0);
      }
      at += n;
    }
  });
}

NodeId mean_cols(Tape& t, NodeId m) {
  const Matrix& mm = t.value(m);
  if (mm.cols() == 0) throw DomainError("mean_cols: empty matrix");
  const double inv = 1.0 / static_cast<double>(mm.cols());
  Matrix value(mm.rows(), 1);
  for (std::size_t i = 0; i < mm.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < mm.cols(); ++j) s += mm(i, j);
    value(i, 0) = s * inv;
  }
  return t.push(std::move(value), {m}, [m, inv](Tape& tp, NodeId out) {
    if (!tp.needs_grad(m)) return;
    const Matrix& g = tp.grad_view(out);
    Matrix& gm = tp.grad(m);
    for (std::size_t i = 0; i < gm.rows(); ++i)
      for (std::size_t j = 0; j < gm.cols(); ++j) gm(i, j) += g(i, 0) * inv;
  });
}

}  // namespace dscnn::ag
