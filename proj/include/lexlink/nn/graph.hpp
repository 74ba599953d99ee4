#pragma once

// Minimal reverse-mode autodiff over dense double matrices. Each operation
// appends a node to a tape; backward() replays the tape in reverse and
// accumulates gradients into every node that was created by param().
//
// The op set is exactly what the token-scoring encoder needs. Gradients are
// validated against central finite differences in the test suite.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace lexlink::nn {

using Mat = Eigen::MatrixXd;

class Graph {
 public:
  // Leaf that does not need a gradient (token ids, constants).
  int input(Mat v) { return push(std::move(v), {}); }

  // Leaf whose gradient is accumulated during backward().
  int param(const Mat& v) { return push(v, {}); }

  const Mat& value(int id) const { return nodes_[check(id)].value; }
  const Mat& grad(int id) const { return nodes_[check(id)].grad; }

  // out(i, :) = table(ids[i], :)
  int rows(int table, std::vector<int> ids) {
    const Mat& t = value(table);
    Mat v(static_cast<Eigen::Index>(ids.size()), t.cols());
    for (std::size_t i = 0; i < ids.size(); ++i)
      v.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
    int id = push(std::move(v), {});
    nodes_[id].back = [this, id, table, ids = std::move(ids)] {
      const Mat& g = nodes_[id].grad;
      Mat& tg = nodes_[table].grad;
      for (std::size_t i = 0; i < ids.size(); ++i)
        tg.row(ids[i]) += g.row(static_cast<Eigen::Index>(i));
    };
    return id;
  }

  int add(int a, int b) {
    int id = push(value(a) + value(b), {});
    nodes_[id].back = [this, id, a, b] {
      nodes_[a].grad += nodes_[id].grad;
      nodes_[b].grad += nodes_[id].grad;
    };
    return id;
  }

  // x (L x c) plus a broadcast row vector v (1 x c).
  int add_rowvec(int x, int v) {
    Mat out = value(x);
    out.rowwise() += Eigen::RowVectorXd(value(v).row(0));
    int id = push(std::move(out), {});
    nodes_[id].back = [this, id, x, v] {
      nodes_[x].grad += nodes_[id].grad;
      nodes_[v].grad.row(0) += nodes_[id].grad.colwise().sum();
    };
    return id;
  }

  int matmul(int a, int b) {
    int id = push(value(a) * value(b), {});
    nodes_[id].back = [this, id, a, b] {
      nodes_[a].grad += nodes_[id].grad * nodes_[b].value.transpose();
      nodes_[b].grad += nodes_[a].value.transpose() * nodes_[id].grad;
    };
    return id;
  }

  // a * b^T without materializing the transpose as a node.
  int matmul_nt(int a, int b) {
    int id = push(value(a) * value(b).transpose(), {});
    nodes_[id].back = [this, id, a, b] {
      nodes_[a].grad += nodes_[id].grad * nodes_[b].value;
      nodes_[b].grad += nodes_[id].grad.transpose() * nodes_[a].value;
    };
    return id;
  }

  int scale(int x, double c) {
    int id = push(value(x) * c, {});
    nodes_[id].back = [this, id, x, c] { nodes_[x].grad += c * nodes_[id].grad; };
    return id;
  }

  int softmax_rows(int x) {
    Mat y = value(x);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      Eigen::RowVectorXd row = y.row(r);
      row.array() -= row.maxCoeff();
      row = row.array().exp();
      y.row(r) = row / row.sum();
    }
    int id = push(std::move(y), {});
    nodes_[id].back = [this, id, x] {
      const Mat& y = nodes_[id].value;
      const Mat& g = nodes_[id].grad;
      Mat& gx = nodes_[x].grad;
      for (Eigen::Index r = 0; r < y.rows(); ++r) {
        const double dot = g.row(r).cwiseProduct(y.row(r)).sum();
        gx.row(r) += y.row(r).cwiseProduct((g.row(r).array() - dot).matrix());
      }
    };
    return id;
  }

  // Row-wise layer normalization with learned gain/bias (both 1 x d).
  int layer_norm(int x, int gain, int bias, double eps = 1e-5) {
    const Mat& xv = value(x);
    const Eigen::Index d = xv.cols();
    Mat xhat(xv.rows(), d);
    Eigen::VectorXd inv_std(xv.rows());
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
      const double mean = xv.row(r).mean();
      Eigen::RowVectorXd centered = xv.row(r).array() - mean;
      const double var = centered.squaredNorm() / static_cast<double>(d);
      inv_std(r) = 1.0 / std::sqrt(var + eps);
      xhat.row(r) = centered * inv_std(r);
    }
    Mat out = xhat;
    out.array().rowwise() *= value(gain).row(0).array();
    out.rowwise() += Eigen::RowVectorXd(value(bias).row(0));
    int id = push(std::move(out), {});
    nodes_[id].back = [this, id, x, gain, bias, xhat = std::move(xhat),
                       inv_std = std::move(inv_std), d] {
      const Mat& g = nodes_[id].grad;
      nodes_[bias].grad.row(0) += g.colwise().sum();
      nodes_[gain].grad.row(0) += g.cwiseProduct(xhat).colwise().sum();
      Mat dxhat = g;
      dxhat.array().rowwise() *= nodes_[gain].value.row(0).array();
      Mat& gx = nodes_[x].grad;
      const double inv_d = 1.0 / static_cast<double>(d);
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        const double mean_dxhat = dxhat.row(r).mean();
        const double mean_dxhat_xhat = dxhat.row(r).cwiseProduct(xhat.row(r)).sum() * inv_d;
        gx.row(r) += inv_std(r) * (dxhat.row(r).array() - mean_dxhat -
                                   xhat.row(r).array() * mean_dxhat_xhat)
                                      .matrix();
      }
    };
    return id;
  }

  int gelu(int x) {
    const Mat& xv = value(x);
    Mat y = xv.unaryExpr([](double v) { return v * 0.5 * std::erfc(-v * M_SQRT1_2); });
    int id = push(std::move(y), {});
    nodes_[id].back = [this, id, x] {
      const Mat& xv = nodes_[x].value;
      Mat dydx = xv.unaryExpr([](double v) {
        const double cdf = 0.5 * std::erfc(-v * M_SQRT1_2);
        const double pdf = std::exp(-0.5 * v * v) * 0.3989422804014327;  // 1/sqrt(2*pi)
        return cdf + v * pdf;
      });
      nodes_[x].grad += nodes_[id].grad.cwiseProduct(dydx);
    };
    return id;
  }

  int slice_cols(int x, int c0, int n) {
    int id = push(value(x).middleCols(c0, n), {});
    nodes_[id].back = [this, id, x, c0, n] {
      nodes_[x].grad.middleCols(c0, n) += nodes_[id].grad;
    };
    return id;
  }

  int concat_cols(const std::vector<int>& xs) {
    Eigen::Index cols = 0;
    for (int x : xs) cols += value(x).cols();
    Mat out(value(xs.front()).rows(), cols);
    Eigen::Index offset = 0;
    for (int x : xs) {
      out.middleCols(offset, value(x).cols()) = value(x);
      offset += value(x).cols();
    }
    int id = push(std::move(out), {});
    nodes_[id].back = [this, id, xs] {
      Eigen::Index offset = 0;
      for (int x : xs) {
        const Eigen::Index n = nodes_[x].value.cols();
        nodes_[x].grad += nodes_[id].grad.middleCols(offset, n);
        offset += n;
      }
    };
    return id;
  }

  // Seeds d(loss)/d(node) and walks the tape backwards.
  void backward(int node, const Mat& seed) {
    if (seed.rows() != value(node).rows() || seed.cols() != value(node).cols())
      throw std::invalid_argument("backward seed shape mismatch");
    nodes_[check(node)].grad = seed;
    for (int i = node; i >= 0; --i)
      if (nodes_[static_cast<std::size_t>(i)].back) nodes_[static_cast<std::size_t>(i)].back();
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void()> back;
  };

  int push(Mat v, std::function<void()> back) {
    Node node;
    node.grad = Mat::Zero(v.rows(), v.cols());
    node.value = std::move(v);
    node.back = std::move(back);
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int check(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
      throw std::out_of_range("graph node id out of range");
    return id;
  }

  std::vector<Node> nodes_;
};

}  // namespace lexlink::nn
