#include "srnn/compute/tape.hpp"

#include <atomic>
#include <cmath>

#include <Eigen/Core>

#include "srnn/error.hpp"

namespace srnn::compute {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

MatMap as_mat(Array2& a) {
  return MatMap(a.data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
}
ConstMatMap as_mat(const Array2& a) {
  return ConstMatMap(a.data(), static_cast<Eigen::Index>(a.rows()),
                     static_cast<Eigen::Index>(a.cols()));
}

std::uint64_t next_tape_id() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

void require_same_shape(const Array2& a, const Array2& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shapes " + a.shape_string() + " and " + b.shape_string() +
                     " differ");
  }
}

}  // namespace

Tape::Tape(bool record_gradients) : record_(record_gradients), id_(next_tape_id()) {}

std::size_t Tape::index(Var v) const {
  if (v.tape_id_ != id_ || v.index_ >= nodes_.size()) {
    throw StateError("variable does not belong to this tape");
  }
  return v.index_;
}

const Array2& Tape::value(Var v) const { return nodes_[index(v)].value; }

Array2& Tape::grad(std::size_t i) {
  Node& n = nodes_[i];
  if (n.grad.size() != n.value.size() || n.grad.rows() != n.value.rows()) {
    n.grad = Array2(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

Var Tape::push(Array2 value, bool needs_grad, std::function<void(Tape&, std::size_t)> backprop) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = record_ && needs_grad;
  if (n.needs_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var(id_, nodes_.size() - 1);
}

Var Tape::constant(Array2 value) { return push(std::move(value), false, nullptr); }

Var Tape::parameter(ParamSet& params, const std::string& path) {
  for (std::size_t i = 0; i < leaf_keys_.size(); ++i) {
    if (leaf_keys_[i].first == &params && leaf_keys_[i].second == path) {
      return Var(id_, leaf_nodes_[i]);
    }
  }
  Parameter& p = params.at(path);
  Var v = push(p.value, true, nullptr);
  nodes_.back().param = &p;
  leaf_keys_.emplace_back(&params, path);
  leaf_nodes_.push_back(v.index_);
  return v;
}

Var Tape::parameter(const ParamSet& params, const std::string& path) {
  return constant(params.at(path).value);
}

Var Tape::affine(Var x, Var weight, Var bias) {
  const std::size_t ix = index(x), iw = index(weight), ib = index(bias);
  const Array2& xv = nodes_[ix].value;
  const Array2& wv = nodes_[iw].value;
  const Array2& bv = nodes_[ib].value;
  if (xv.cols() != wv.cols()) {
    throw ShapeError("affine: input " + xv.shape_string() + " incompatible with weight " +
                     wv.shape_string());
  }
  if (bv.size() != wv.rows()) {
    throw ShapeError("affine: bias " + bv.shape_string() + " incompatible with weight " +
                     wv.shape_string());
  }
  Array2 out(xv.rows(), wv.rows());
  auto o = as_mat(out);
  o.noalias() = as_mat(xv) * as_mat(wv).transpose();
  o.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bv.data(), static_cast<Eigen::Index>(bv.size()));
  const bool ng = needs(x) || needs(weight) || needs(bias);
  return push(std::move(out), ng, [ix, iw, ib](Tape& t, std::size_t self) {
    const Array2& g = t.nodes_[self].grad;
    auto gm = as_mat(g);
    if (t.nodes_[ix].needs_grad) {
      as_mat(t.grad(ix)).noalias() += gm * as_mat(t.nodes_[iw].value);
    }
    if (t.nodes_[iw].needs_grad) {
      as_mat(t.grad(iw)).noalias() += gm.transpose() * as_mat(t.nodes_[ix].value);
    }
    if (t.nodes_[ib].needs_grad) {
      Array2& gb = t.grad(ib);
      MatMap(gb.data(), 1, static_cast<Eigen::Index>(gb.size())) += gm.colwise().sum();
    }
  });
}

Var Tape::relu(Var x) {
  const std::size_t ix = index(x);
  Array2 out = nodes_[ix].value;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return push(std::move(out), needs(x), [ix](Tape& t, std::size_t self) {
    const Array2& g = t.nodes_[self].grad;
    const Array2& y = t.nodes_[self].value;
    Array2& gx = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (y[i] > 0.0) gx[i] += g[i];
    }
  });
}

Var Tape::sigmoid(Var x) {
  const std::size_t ix = index(x);
  Array2 out = nodes_[ix].value;
  for (double& v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
  return push(std::move(out), needs(x), [ix](Tape& t, std::size_t self) {
    const Array2& g = t.nodes_[self].grad;
    const Array2& y = t.nodes_[self].value;
    Array2& gx = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var Tape::tanh(Var x) {
  const std::size_t ix = index(x);
  Array2 out = nodes_[ix].value;
  for (double& v : out.values()) v = std::tanh(v);
  return push(std::move(out), needs(x), [ix](Tape& t, std::size_t self) {
    const Array2& g = t.nodes_[self].grad;
    const Array2& y = t.nodes_[self].value;
    Array2& gx = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var Tape::add(Var a, Var b) {
  const std::size_t ia = index(a), ib = index(b);
  require_same_shape(nodes_[ia].value, nodes_[ib].value, "add");
  Array2 out = nodes_[ia].value;
  const Array2& bv = nodes_[ib].value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return push(std::move(out), needs(a) || needs(b), [ia, ib](Tape& t, std::size_t self) {
    const Array2& g = t.nodes_[self].grad;
    for (std::size_t in : {ia, ib}) {
      if (!t.nodes_[in].needs_grad) continue;
      Array2& gi = t.grad(in);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  const std::size_t ia = index(a), ib = index(b);
  require_same_shape(nodes_[ia].value, nodes_[ib].value, "mul");
  Array2 out = nodes_[ia].value;
  const Array2& bv = nodes_[ib].value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return push(std::move(out), needs(a) || needs(b), [ia, ib](Tape& t, std::size_t self) {
    const Array2& g = t.nodes_[self].grad;
    if (t.nodes_[ia].needs_grad) {
      const Array2& bv = t.nodes_[ib].value;
      Array2& ga = t.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.nodes_[ib].needs_grad) {
      const Array2& av = t.nodes_[ia].value;
      Array2& gb = t.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  std::vector<std::size_t> ids;
  std::size_t rows = nodes_[index(parts.front())].value.rows();
  std::size_t cols = 0;
  bool ng = false;
  for (Var p : parts) {
    const std::size_t i = index(p);
    if (nodes_[i].value.rows() != rows) {
      throw ShapeError("concat_cols: row counts differ (" + std::to_string(rows) + " vs " +
                       std::to_string(nodes_[i].value.rows()) + ")");
    }
    ids.push_back(i);
    cols += nodes_[i].value.cols();
    ng = ng || nodes_[i].needs_grad;
  }
  Array2 out(rows, cols);
  std::size_t offset = 0;
  for (std::size_t i : ids) {
    const Array2& v = nodes_[i].value;
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + offset);
    }
    offset += v.cols();
  }
  return push(std::move(out), ng, [ids](Tape& t, std::size_t self) {
    const Array2& g = t.nodes_[self].grad;
    std::size_t offset = 0;
    for (std::size_t i : ids) {
      const std::size_t c = t.nodes_[i].value.cols();
      if (t.nodes_[i].needs_grad) {
        Array2& gi = t.grad(i);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t k = 0; k < c; ++k) gi(r, k) += g(r, offset + k);
        }
      }
      offset += c;
    }
  });
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  std::vector<std::size_t> ids;
  const std::size_t cols = nodes_[index(parts.front())].value.cols();
  std::vector<double> values;
  std::size_t rows = 0;
  bool ng = false;
  for (Var p : parts) {
    const std::size_t i = index(p);
    const Array2& v = nodes_[i].value;
    if (v.cols() != cols) throw ShapeError("concat_rows: column counts differ");
    ids.push_back(i);
    values.insert(values.end(), v.values().begin(), v.values().end());
    rows += v.rows();
    ng = ng || nodes_[i].needs_grad;
  }
  return push(Array2(rows, cols, std::move(values)), ng, [ids](Tape& t, std::size_t self) {
    const Array2& g = t.nodes_[self].grad;
    std::size_t offset = 0;
    for (std::size_t i : ids) {
      const std::size_t n = t.nodes_[i].value.size();
      if (t.nodes_[i].needs_grad) {
        Array2& gi = t.grad(i);
        for (std::size_t k = 0; k < n; ++k) gi[k] += g[offset + k];
      }
      offset += n;
    }
  });
}

Var Tape::slice_cols(Var x, std::size_t start, std::size_t count) {
  const std::size_t ix = index(x);
  const Array2& v = nodes_[ix].value;
  if (start + count > v.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") outside " + v.shape_string());
  }
  Array2 out(v.rows(), count);
  for (std::size_t r = 0; r < v.rows(); ++r) {
    std::copy_n(v.row(r).begin() + start, count, out.row(r).begin());
  }
  return push(std::move(out), needs(x), [ix, start, count](Tape& t, std::size_t self) {
    const Array2& g = t.nodes_[self].grad;
    Array2& gx = t.grad(ix);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t k = 0; k < count; ++k) gx(r, start + k) += g(r, k);
    }
  });
}

Var Tape::mean_rows(Var x, std::shared_ptr<const RowGroups> groups) {
  const std::size_t ix = index(x);
  const Array2& v = nodes_[ix].value;
  if (groups->input_rows != v.rows()) {
    throw ShapeError("mean_rows: grouping expects " + std::to_string(groups->input_rows) +
                     " rows, got " + v.shape_string());
  }
  Array2 out(groups->sources.size(), v.cols());
  for (std::size_t r = 0; r < groups->sources.size(); ++r) {
    const auto& src = groups->sources[r];
    if (src.empty()) continue;
    const double w = 1.0 / static_cast<double>(src.size());
    for (std::size_t s : src) {
      for (std::size_t k = 0; k < v.cols(); ++k) out(r, k) += v(s, k);
    }
    for (double& o : out.row(r)) o *= w;
  }
  return push(std::move(out), needs(x), [ix, groups](Tape& t, std::size_t self) {
    const Array2& g = t.nodes_[self].grad;
    Array2& gx = t.grad(ix);
    for (std::size_t r = 0; r < groups->sources.size(); ++r) {
      const auto& src = groups->sources[r];
      if (src.empty()) continue;
      const double w = 1.0 / static_cast<double>(src.size());
      for (std::size_t s : src) {
        for (std::size_t k = 0; k < g.cols(); ++k) gx(s, k) += w * g(r, k);
      }
    }
  });
}

Var Tape::lstm_cell(Var gates, Var cell) {
  const std::size_t iz = index(gates), ic = index(cell);
  const Array2& z = nodes_[iz].value;
  const Array2& c = nodes_[ic].value;
  const std::size_t hidden = c.cols();
  if (z.rows() != c.rows() || z.cols() != 4 * hidden) {
    throw ShapeError("lstm_cell: gates " + z.shape_string() + " do not fit cell " + c.shape_string());
  }
  const bool ng = record_ && (needs(gates) || needs(cell));
  // Gate activations i, f, g, o and tanh(c') per unit, kept for the backward pass.
  auto acts = ng ? std::make_shared<std::vector<double>>(c.rows() * 5 * hidden) : nullptr;
  Array2 out(c.rows(), 2 * hidden);
  for (std::size_t r = 0; r < c.rows(); ++r) {
    const double* zr = z.data() + r * z.cols();
    for (std::size_t k = 0; k < hidden; ++k) {
      const double i = 1.0 / (1.0 + std::exp(-zr[k]));
      const double f = 1.0 / (1.0 + std::exp(-zr[hidden + k]));
      const double g = std::tanh(zr[2 * hidden + k]);
      const double o = 1.0 / (1.0 + std::exp(-zr[3 * hidden + k]));
      const double cn = f * c(r, k) + i * g;
      const double tc = std::tanh(cn);
      out(r, k) = o * tc;
      out(r, hidden + k) = cn;
      if (acts) {
        double* a = acts->data() + (r * hidden + k) * 5;
        a[0] = i;
        a[1] = f;
        a[2] = g;
        a[3] = o;
        a[4] = tc;
      }
    }
  }
  return push(std::move(out), ng, [iz, ic, hidden, acts](Tape& t, std::size_t self) {
    const Array2& grad_out = t.nodes_[self].grad;
    const Array2& c = t.nodes_[ic].value;
    Array2* gz = t.nodes_[iz].needs_grad ? &t.grad(iz) : nullptr;
    Array2* gc = t.nodes_[ic].needs_grad ? &t.grad(ic) : nullptr;
    for (std::size_t r = 0; r < c.rows(); ++r) {
      for (std::size_t k = 0; k < hidden; ++k) {
        const double* a = acts->data() + (r * hidden + k) * 5;
        const double i = a[0], f = a[1], g = a[2], o = a[3], tc = a[4];
        const double dh = grad_out(r, k);
        const double dc = grad_out(r, hidden + k) + dh * o * (1.0 - tc * tc);
        if (gz) {
          double* gr = gz->data() + r * gz->cols();
          gr[k] += dc * g * i * (1.0 - i);
          gr[hidden + k] += dc * c(r, k) * f * (1.0 - f);
          gr[2 * hidden + k] += dc * i * (1.0 - g * g);
          gr[3 * hidden + k] += dh * tc * o * (1.0 - o);
        }
        if (gc) (*gc)(r, k) += dc * f;
      }
    }
  });
}

Var Tape::mse(Var pred, const Array2& target) {
  const std::size_t ip = index(pred);
  const Array2& p = nodes_[ip].value;
  require_same_shape(p, target, "mse");
  if (p.empty()) throw ShapeError("mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - target[i];
    sum += d * d;
  }
  const double n = static_cast<double>(p.size());
  return push(Array2(1, 1, sum / n), needs(pred), [ip, target, n](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad[0];
    const Array2& p = t.nodes_[ip].value;
    Array2& gp = t.grad(ip);
    for (std::size_t i = 0; i < p.size(); ++i) gp[i] += g * 2.0 * (p[i] - target[i]) / n;
  });
}

void Tape::backward(Var loss) {
  if (!record_) throw StateError("backward on a tape that does not record gradients");
  if (nodes_.empty() || !loss.valid()) throw StateError("backward without a recorded forward pass");
  if (consumed_) throw StateError("backward already ran on this tape");
  const std::size_t il = index(loss);
  if (nodes_[il].value.size() != 1) {
    throw StateError("backward needs a scalar loss, got " + nodes_[il].value.shape_string());
  }
  consumed_ = true;
  grad(il)[0] = 1.0;
  for (std::size_t i = il + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.param != nullptr) {
      for (std::size_t k = 0; k < n.grad.size(); ++k) n.param->grad[k] += n.grad[k];
    } else if (n.backprop) {
      n.backprop(*this, i);
    }
  }
}

}  // namespace srnn::compute
