#include "gridshed/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

namespace gridshed::ad {

int Tape::check(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("tape: bad node id " + std::to_string(id));
  return id;
}

int Tape::push(Matrix value, std::function<void(Tape&)> back) {
  Node n;
  n.grad = Matrix(value.rows, value.cols, 0.0);
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::input(Matrix value) { return push(std::move(value), {}); }

int Tape::add(int a, int b) {
  check(a); check(b);
  if (!val(a).same_shape(val(b))) throw std::invalid_argument("add: shape mismatch");
  Matrix out = val(a);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += val(b).data[i];
  const int id = push(std::move(out), {});
  nodes_.back().back = [a, b, id](Tape& t) {
    const Matrix& go = t.g(id);
    for (std::size_t i = 0; i < go.size(); ++i) {
      t.g(a).data[i] += go.data[i];
      t.g(b).data[i] += go.data[i];
    }
  };
  return id;
}

int Tape::mul(int a, int b) {
  check(a); check(b);
  if (!val(a).same_shape(val(b))) throw std::invalid_argument("mul: shape mismatch");
  Matrix out = val(a);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= val(b).data[i];
  const int id = push(std::move(out), {});
  nodes_.back().back = [a, b, id](Tape& t) {
    const Matrix& go = t.g(id);
    const Matrix& va = t.value(a);
    const Matrix& vb = t.value(b);
    for (std::size_t i = 0; i < go.size(); ++i) {
      t.g(a).data[i] += go.data[i] * vb.data[i];
      t.g(b).data[i] += go.data[i] * va.data[i];
    }
  };
  return id;
}

int Tape::scale(int a, double k) {
  check(a);
  Matrix out = val(a);
  for (double& v : out.data) v *= k;
  const int id = push(std::move(out), {});
  nodes_.back().back = [a, k, id](Tape& t) {
    const Matrix& go = t.g(id);
    for (std::size_t i = 0; i < go.size(); ++i) t.g(a).data[i] += k * go.data[i];
  };
  return id;
}

int Tape::add_rowvec(int a, int v) {
  check(a); check(v);
  if (val(v).rows != 1 || val(v).cols != val(a).cols)
    throw std::invalid_argument("add_rowvec: v must be 1 x cols(a)");
  Matrix out = val(a);
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) out.at(r, c) += val(v).at(0, c);
  const int id = push(std::move(out), {});
  nodes_.back().back = [a, v, id](Tape& t) {
    const Matrix& go = t.g(id);
    for (int r = 0; r < go.rows; ++r)
      for (int c = 0; c < go.cols; ++c) {
        t.g(a).at(r, c) += go.at(r, c);
        t.g(v).at(0, c) += go.at(r, c);
      }
  };
  return id;
}

namespace {

// C += A * B
void gemm_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.data.data() + static_cast<std::size_t>(i) * a.cols;
    double* crow = c.data.data() + static_cast<std::size_t>(i) * c.cols;
    for (int k = 0; k < a.cols; ++k) {
      const double av = arow[k];
      if (av == 0.0) continue;
      const double* brow = b.data.data() + static_cast<std::size_t>(k) * b.cols;
      for (int j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
    }
  }
}

// C += A * B^T
void gemm_nt_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.data.data() + static_cast<std::size_t>(i) * a.cols;
    double* crow = c.data.data() + static_cast<std::size_t>(i) * c.cols;
    for (int j = 0; j < b.rows; ++j) {
      const double* brow = b.data.data() + static_cast<std::size_t>(j) * b.cols;
      double dot = 0.0;
      for (int k = 0; k < a.cols; ++k) dot += arow[k] * brow[k];
      crow[j] += dot;
    }
  }
}

// C += A^T * B
void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  for (int k = 0; k < a.rows; ++k) {
    const double* arow = a.data.data() + static_cast<std::size_t>(k) * a.cols;
    const double* brow = b.data.data() + static_cast<std::size_t>(k) * b.cols;
    for (int i = 0; i < a.cols; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c.data.data() + static_cast<std::size_t>(i) * c.cols;
      for (int j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

int Tape::matmul(int a, int b) {
  check(a); check(b);
  if (val(a).cols != val(b).rows) throw std::invalid_argument("matmul: inner dims differ");
  Matrix out(val(a).rows, val(b).cols, 0.0);
  gemm_acc(val(a), val(b), out);
  const int id = push(std::move(out), {});
  nodes_.back().back = [a, b, id](Tape& t) {
    gemm_nt_acc(t.g(id), t.value(b), t.g(a));  // dA += dC * B^T
    gemm_tn_acc(t.value(a), t.g(id), t.g(b));  // dB += A^T * dC
  };
  return id;
}

int Tape::matmul_nt(int a, int b) {
  check(a); check(b);
  if (val(a).cols != val(b).cols) throw std::invalid_argument("matmul_nt: inner dims differ");
  Matrix out(val(a).rows, val(b).rows, 0.0);
  gemm_nt_acc(val(a), val(b), out);
  const int id = push(std::move(out), {});
  nodes_.back().back = [a, b, id](Tape& t) {
    gemm_acc(t.g(id), t.value(b), t.g(a));     // dA += dC * B
    gemm_tn_acc(t.g(id), t.value(a), t.g(b));  // dB += dC^T * A
  };
  return id;
}

int Tape::relu(int a) {
  check(a);
  Matrix out = val(a);
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  const int id = push(std::move(out), {});
  nodes_.back().back = [a, id](Tape& t) {
    const Matrix& go = t.g(id);
    const Matrix& va = t.value(a);
    for (std::size_t i = 0; i < go.size(); ++i)
      if (va.data[i] > 0.0) t.g(a).data[i] += go.data[i];
  };
  return id;
}

int Tape::sigmoid(int a) {
  check(a);
  Matrix out = val(a);
  for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  const int id = push(std::move(out), {});
  nodes_.back().back = [a, id](Tape& t) {
    const Matrix& go = t.g(id);
    const Matrix& y = t.value(id);
    for (std::size_t i = 0; i < go.size(); ++i)
      t.g(a).data[i] += go.data[i] * y.data[i] * (1.0 - y.data[i]);
  };
  return id;
}

int Tape::row_softmax(int a) {
  check(a);
  Matrix out = val(a);
  for (int r = 0; r < out.rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < out.cols; ++c) mx = std::max(mx, out.at(r, c));
    double sum = 0.0;
    for (int c = 0; c < out.cols; ++c) {
      out.at(r, c) = std::exp(out.at(r, c) - mx);
      sum += out.at(r, c);
    }
    for (int c = 0; c < out.cols; ++c) out.at(r, c) /= sum;
  }
  const int id = push(std::move(out), {});
  nodes_.back().back = [a, id](Tape& t) {
    const Matrix& go = t.g(id);
    const Matrix& y = t.value(id);
    for (int r = 0; r < go.rows; ++r) {
      double dot = 0.0;
      for (int c = 0; c < go.cols; ++c) dot += go.at(r, c) * y.at(r, c);
      for (int c = 0; c < go.cols; ++c)
        t.g(a).at(r, c) += y.at(r, c) * (go.at(r, c) - dot);
    }
  };
  return id;
}

int Tape::masked_row_softmax(int a, std::vector<char> mask) {
  check(a);
  const Matrix& va = val(a);
  if (mask.size() != va.size()) throw std::invalid_argument("masked_row_softmax: mask size mismatch");
  Matrix out(va.rows, va.cols, 0.0);
  for (int r = 0; r < va.rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (int c = 0; c < va.cols; ++c) {
      if (!mask[static_cast<std::size_t>(r) * va.cols + c]) continue;
      any = true;
      mx = std::max(mx, va.at(r, c));
    }
    if (!any) continue;  // empty neighborhood: all-zero row
    double sum = 0.0;
    for (int c = 0; c < va.cols; ++c) {
      if (!mask[static_cast<std::size_t>(r) * va.cols + c]) continue;
      out.at(r, c) = std::exp(va.at(r, c) - mx);
      sum += out.at(r, c);
    }
    for (int c = 0; c < va.cols; ++c)
      if (mask[static_cast<std::size_t>(r) * va.cols + c]) out.at(r, c) /= sum;
  }
  const int id = push(std::move(out), {});
  auto m = std::make_shared<std::vector<char>>(std::move(mask));
  nodes_.back().back = [a, id, m](Tape& t) {
    const Matrix& go = t.g(id);
    const Matrix& y = t.value(id);
    for (int r = 0; r < go.rows; ++r) {
      double dot = 0.0;
      bool any = false;
      for (int c = 0; c < go.cols; ++c) {
        if (!(*m)[static_cast<std::size_t>(r) * go.cols + c]) continue;
        any = true;
        dot += go.at(r, c) * y.at(r, c);
      }
      if (!any) continue;
      for (int c = 0; c < go.cols; ++c) {
        if (!(*m)[static_cast<std::size_t>(r) * go.cols + c]) continue;
        t.g(a).at(r, c) += y.at(r, c) * (go.at(r, c) - dot);
      }
    }
  };
  return id;
}

int Tape::layer_norm(int a, int gain, int bias, double eps) {
  check(a); check(gain); check(bias);
  const Matrix& va = val(a);
  if (val(gain).rows != 1 || val(gain).cols != va.cols || val(bias).rows != 1 ||
      val(bias).cols != va.cols)
    throw std::invalid_argument("layer_norm: gain/bias must be 1 x cols(a)");
  const int cols = va.cols;
  Matrix out(va.rows, cols, 0.0);
  // Cache per-row inverse stddev and normalized values for backward.
  auto inv_std = std::make_shared<std::vector<double>>(va.rows, 0.0);
  auto xhat = std::make_shared<Matrix>(va.rows, cols, 0.0);
  for (int r = 0; r < va.rows; ++r) {
    double mean = 0.0;
    for (int c = 0; c < cols; ++c) mean += va.at(r, c);
    mean /= cols;
    double var = 0.0;
    for (int c = 0; c < cols; ++c) {
      const double d = va.at(r, c) - mean;
      var += d * d;
    }
    var /= cols;
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (int c = 0; c < cols; ++c) {
      const double xh = (va.at(r, c) - mean) * is;
      xhat->at(r, c) = xh;
      out.at(r, c) = val(gain).at(0, c) * xh + val(bias).at(0, c);
    }
  }
  const int id = push(std::move(out), {});
  nodes_.back().back = [a, gain, bias, id, inv_std, xhat](Tape& t) {
    const Matrix& go = t.g(id);
    const Matrix& vg = t.value(gain);
    const int cols = go.cols;
    for (int r = 0; r < go.rows; ++r) {
      double sum_dx = 0.0, sum_dx_xh = 0.0;
      for (int c = 0; c < cols; ++c) {
        const double dxh = go.at(r, c) * vg.at(0, c);
        sum_dx += dxh;
        sum_dx_xh += dxh * xhat->at(r, c);
        t.g(gain).at(0, c) += go.at(r, c) * xhat->at(r, c);
        t.g(bias).at(0, c) += go.at(r, c);
      }
      const double m1 = sum_dx / cols, m2 = sum_dx_xh / cols;
      for (int c = 0; c < cols; ++c) {
        const double dxh = go.at(r, c) * vg.at(0, c);
        t.g(a).at(r, c) += (*inv_std)[r] * (dxh - m1 - xhat->at(r, c) * m2);
      }
    }
  };
  return id;
}

int Tape::concat_rows(int a, int b) {
  check(a); check(b);
  if (val(a).rows != val(b).rows) throw std::invalid_argument("concat_rows: row counts differ");
  const int ca = val(a).cols, cb = val(b).cols;
  Matrix out(val(a).rows, ca + cb, 0.0);
  for (int r = 0; r < out.rows; ++r) {
    for (int c = 0; c < ca; ++c) out.at(r, c) = val(a).at(r, c);
    for (int c = 0; c < cb; ++c) out.at(r, ca + c) = val(b).at(r, c);
  }
  const int id = push(std::move(out), {});
  nodes_.back().back = [a, b, ca, cb, id](Tape& t) {
    const Matrix& go = t.g(id);
    for (int r = 0; r < go.rows; ++r) {
      for (int c = 0; c < ca; ++c) t.g(a).at(r, c) += go.at(r, c);
      for (int c = 0; c < cb; ++c) t.g(b).at(r, c) += go.at(r, ca + c);
    }
  };
  return id;
}

int Tape::mean_rows(int a) {
  check(a);
  const Matrix& va = val(a);
  if (va.rows == 0) throw std::invalid_argument("mean_rows: empty matrix");
  Matrix out(1, va.cols, 0.0);
  for (int r = 0; r < va.rows; ++r)
    for (int c = 0; c < va.cols; ++c) out.at(0, c) += va.at(r, c);
  for (int c = 0; c < va.cols; ++c) out.at(0, c) /= va.rows;
  const int id = push(std::move(out), {});
  const int rows = va.rows;
  nodes_.back().back = [a, rows, id](Tape& t) {
    const Matrix& go = t.g(id);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < go.cols; ++c) t.g(a).at(r, c) += go.at(0, c) / rows;
  };
  return id;
}

int Tape::gather_rows(int a, std::vector<int> idx) {
  check(a);
  const Matrix& va = val(a);
  for (int i : idx)
    if (i < 0 || i >= va.rows) throw std::invalid_argument("gather_rows: index out of range");
  Matrix out(static_cast<int>(idx.size()), va.cols, 0.0);
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < va.cols; ++c) out.at(r, c) = va.at(idx[r], c);
  const int id = push(std::move(out), {});
  auto ix = std::make_shared<std::vector<int>>(std::move(idx));
  nodes_.back().back = [a, id, ix](Tape& t) {
    const Matrix& go = t.g(id);
    for (int r = 0; r < go.rows; ++r)
      for (int c = 0; c < go.cols; ++c) t.g(a).at((*ix)[r], c) += go.at(r, c);
  };
  return id;
}

int Tape::select_pairs(int a, std::vector<int> rs, std::vector<int> cs) {
  check(a);
  if (rs.size() != cs.size()) throw std::invalid_argument("select_pairs: index lists differ");
  const Matrix& va = val(a);
  for (std::size_t k = 0; k < rs.size(); ++k)
    if (rs[k] < 0 || rs[k] >= va.rows || cs[k] < 0 || cs[k] >= va.cols)
      throw std::invalid_argument("select_pairs: index out of range");
  Matrix out(static_cast<int>(rs.size()), 1, 0.0);
  for (std::size_t k = 0; k < rs.size(); ++k) out.at(static_cast<int>(k), 0) = va.at(rs[k], cs[k]);
  const int id = push(std::move(out), {});
  auto r = std::make_shared<std::vector<int>>(std::move(rs));
  auto c = std::make_shared<std::vector<int>>(std::move(cs));
  nodes_.back().back = [a, id, r, c](Tape& t) {
    const Matrix& go = t.g(id);
    for (int k = 0; k < go.rows; ++k) t.g(a).at((*r)[k], (*c)[k]) += go.at(k, 0);
  };
  return id;
}

int Tape::scatter_pairs(int v, std::vector<int> rs, std::vector<int> cs, int rows, int cols) {
  check(v);
  if (rs.size() != cs.size()) throw std::invalid_argument("scatter_pairs: index lists differ");
  const Matrix& vv = val(v);
  if (vv.cols != 1 || vv.rows != static_cast<int>(rs.size()))
    throw std::invalid_argument("scatter_pairs: v must be k x 1 matching indices");
  for (std::size_t k = 0; k < rs.size(); ++k)
    if (rs[k] < 0 || rs[k] >= rows || cs[k] < 0 || cs[k] >= cols)
      throw std::invalid_argument("scatter_pairs: index out of range");
  Matrix out(rows, cols, 0.0);
  for (std::size_t k = 0; k < rs.size(); ++k)
    out.at(rs[k], cs[k]) += vv.at(static_cast<int>(k), 0);
  const int id = push(std::move(out), {});
  auto r = std::make_shared<std::vector<int>>(std::move(rs));
  auto c = std::make_shared<std::vector<int>>(std::move(cs));
  nodes_.back().back = [v, id, r, c](Tape& t) {
    const Matrix& go = t.g(id);
    for (int k = 0; k < static_cast<int>(r->size()); ++k)
      t.g(v).at(k, 0) += go.at((*r)[k], (*c)[k]);
  };
  return id;
}

int Tape::rowscale(int a, int s) {
  check(a); check(s);
  const Matrix& va = val(a);
  if (val(s).cols != 1 || val(s).rows != va.rows)
    throw std::invalid_argument("rowscale: s must be rows(a) x 1");
  Matrix out = va;
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) out.at(r, c) *= val(s).at(r, 0);
  const int id = push(std::move(out), {});
  nodes_.back().back = [a, s, id](Tape& t) {
    const Matrix& go = t.g(id);
    const Matrix& va = t.value(a);
    const Matrix& vs = t.value(s);
    for (int r = 0; r < go.rows; ++r) {
      double dot = 0.0;
      for (int c = 0; c < go.cols; ++c) {
        t.g(a).at(r, c) += go.at(r, c) * vs.at(r, 0);
        dot += go.at(r, c) * va.at(r, c);
      }
      t.g(s).at(r, 0) += dot;
    }
  };
  return id;
}

int Tape::segment_sum_rows(int a, std::vector<int> seg, int n_seg) {
  check(a);
  const Matrix& va = val(a);
  if (static_cast<int>(seg.size()) != va.rows)
    throw std::invalid_argument("segment_sum_rows: segment list must match rows");
  for (int s : seg)
    if (s < 0 || s >= n_seg) throw std::invalid_argument("segment_sum_rows: segment out of range");
  Matrix out(n_seg, va.cols, 0.0);
  for (int r = 0; r < va.rows; ++r)
    for (int c = 0; c < va.cols; ++c) out.at(seg[r], c) += va.at(r, c);
  const int id = push(std::move(out), {});
  auto sg = std::make_shared<std::vector<int>>(std::move(seg));
  nodes_.back().back = [a, id, sg](Tape& t) {
    const Matrix& go = t.g(id);
    for (int r = 0; r < static_cast<int>(sg->size()); ++r)
      for (int c = 0; c < go.cols; ++c) t.g(a).at(r, c) += go.at((*sg)[r], c);
  };
  return id;
}

void Tape::backward(int root) {
  check(root);
  if (val(root).rows != 1 || val(root).cols != 1)
    throw std::invalid_argument("backward: root must be a 1x1 scalar");
  for (Node& n : nodes_) std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0);
  g(root).at(0, 0) = 1.0;
  for (int id = root; id >= 0; --id)
    if (nodes_[id].back) nodes_[id].back(*this);
}

}  // namespace gridshed::ad
