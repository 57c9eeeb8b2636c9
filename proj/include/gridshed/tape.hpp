#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "gridshed/matrix.hpp"

namespace gridshed::ad {

// Reverse-mode autodiff over dense rank-2 tensors. Nodes are created in
// topological order; backward() replays the tape in reverse. Every op
// validates shapes and throws std::invalid_argument on mismatch.
// References returned by value()/grad() stay valid as the tape grows.
class Tape {
 public:
  int input(Matrix value);

  const Matrix& value(int id) const { return nodes_[check(id)].value; }
  const Matrix& grad(int id) const { return nodes_[check(id)].grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

  int add(int a, int b);
  int mul(int a, int b);                // elementwise
  int scale(int a, double k);
  int add_rowvec(int a, int v);         // v is 1 x cols, broadcast over rows
  int matmul(int a, int b);             // A (r x k) * B (k x c)
  int matmul_nt(int a, int b);          // A (r x k) * B^T (k x c), B is c x k
  int relu(int a);
  int sigmoid(int a);
  int row_softmax(int a);
  // mask has rows*cols entries (row-major), nonzero = participate. Rows with
  // an empty mask produce all zeros and propagate no gradient.
  int masked_row_softmax(int a, std::vector<char> mask);
  // Row-wise layer norm with learnable gain/bias (1 x cols each).
  int layer_norm(int a, int gain, int bias, double eps = 1e-5);
  int concat_rows(int a, int b);        // [A | B] per row
  int mean_rows(int a);                 // 1 x cols
  int gather_rows(int a, std::vector<int> idx);
  // out[k] = a(rs[k], cs[k]) as a k x 1 column.
  int select_pairs(int a, std::vector<int> rs, std::vector<int> cs);
  // Dense rows x cols matrix with v[k] accumulated at (rs[k], cs[k]).
  int scatter_pairs(int v, std::vector<int> rs, std::vector<int> cs, int rows, int cols);
  int rowscale(int a, int s);           // s is rows x 1; scales each row of a
  // out[seg[r]] += a[r] row-wise; seg values in [0, n_seg).
  int segment_sum_rows(int a, std::vector<int> seg, int n_seg);

  // Seeds d(root)/d(root) = 1 (root must be 1x1) and accumulates gradients
  // into every node reachable backwards.
  void backward(int root);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&)> back;  // empty for inputs
  };

  std::deque<Node> nodes_;  // deque: growth never moves existing nodes

  int push(Matrix value, std::function<void(Tape&)> back);
  int check(int id) const;
  Matrix& val(int id) { return nodes_[id].value; }
  Matrix& g(int id) { return nodes_[id].grad; }

  friend struct TapeOps;
};

}  // namespace gridshed::ad
