#include "step/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace step {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void matvec(const Tensor& W, const double* x, double* y, bool accumulate) {
  const std::size_t out = W.dim(0), in = W.dim(1);
  for (std::size_t r = 0; r < out; ++r) {
    const double s = dot(W.row(r), x, in);
    y[r] = accumulate ? y[r] + s : s;
  }
}

void matvec_transposed_acc(const Tensor& W, const double* g, double* x_grad) {
  const std::size_t out = W.dim(0), in = W.dim(1);
  for (std::size_t r = 0; r < out; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    const double* wr = W.row(r);
    for (std::size_t c = 0; c < in; ++c) x_grad[c] += gr * wr[c];
  }
}

Tensor affine(const Tensor& x, const Tensor& W, const Tensor* b) {
  if (x.rank() != 2 || W.rank() != 2 || x.dim(1) != W.dim(1)) {
    throw std::invalid_argument("affine: shape mismatch, x " + x.shape_str() +
                                " vs W " + W.shape_str());
  }
  const std::size_t n = x.dim(0), out = W.dim(0);
  if (b && (b->rank() != 1 || b->dim(0) != out)) {
    throw std::invalid_argument("affine: bias shape mismatch");
  }
  Tensor y({n, out});
  for (std::size_t i = 0; i < n; ++i) {
    double* yi = y.row(i);
    matvec(W, x.row(i), yi, false);
    if (b) {
      for (std::size_t r = 0; r < out; ++r) yi[r] += (*b)[r];
    }
  }
  return y;
}

void affine_backward(const Tensor& x, const Tensor& W, const Tensor& grad_out,
                     Tensor* grad_x, Tensor* grad_W, Tensor* grad_b) {
  const std::size_t n = x.dim(0), in = x.dim(1), out = W.dim(0);
  if (grad_out.dim(0) != n || grad_out.dim(1) != out) {
    throw std::invalid_argument("affine_backward: grad_out shape mismatch");
  }
  if (grad_x) {
    for (std::size_t i = 0; i < n; ++i) {
      matvec_transposed_acc(W, grad_out.row(i), grad_x->row(i));
    }
  }
  if (grad_W) {
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = x.row(i);
      const double* gi = grad_out.row(i);
      for (std::size_t r = 0; r < out; ++r) {
        const double gr = gi[r];
        if (gr == 0.0) continue;
        double* wr = grad_W->row(r);
        for (std::size_t c = 0; c < in; ++c) wr[c] += gr * xi[c];
      }
    }
  }
  if (grad_b) {
    for (std::size_t i = 0; i < n; ++i) {
      const double* gi = grad_out.row(i);
      for (std::size_t r = 0; r < out; ++r) (*grad_b)[r] += gi[r];
    }
  }
}

double elementwise_scalar(Elementwise kind, double x) {
  switch (kind) {
    case Elementwise::kRelu:
      return x > 0.0 ? x : 0.0;
    case Elementwise::kSigmoid:
      if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
      } else {
        const double e = std::exp(x);
        return e / (1.0 + e);
      }
    case Elementwise::kCos:
      return std::cos(x);
  }
  return 0.0;
}

Tensor elementwise(Elementwise kind, const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = elementwise_scalar(kind, x[i]);
  return y;
}

void elementwise_backward(Elementwise kind, const Tensor& x, const Tensor& y,
                          const Tensor& grad_out, Tensor* grad_x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = 0.0;
    switch (kind) {
      case Elementwise::kRelu:
        d = x[i] > 0.0 ? 1.0 : 0.0;
        break;
      case Elementwise::kSigmoid:
        d = y[i] * (1.0 - y[i]);
        break;
      case Elementwise::kCos:
        d = -std::sin(x[i]);
        break;
    }
    (*grad_x)[i] += grad_out[i] * d;
  }
}

Tensor row_softmax(const Tensor& x) {
  if (x.rank() != 2) throw std::invalid_argument("row_softmax: expected a matrix");
  const std::size_t n = x.dim(0), m = x.dim(1);
  Tensor y({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    double* yi = y.row(i);
    double mx = xi[0];
    for (std::size_t j = 1; j < m; ++j) mx = std::max(mx, xi[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      yi[j] = std::exp(xi[j] - mx);
      sum += yi[j];
    }
    for (std::size_t j = 0; j < m; ++j) yi[j] /= sum;
  }
  return y;
}

void row_softmax_backward(const Tensor& y, const Tensor& grad_out, Tensor* grad_x) {
  const std::size_t n = y.dim(0), m = y.dim(1);
  for (std::size_t i = 0; i < n; ++i) {
    const double* yi = y.row(i);
    const double* gi = grad_out.row(i);
    const double inner = dot(yi, gi, m);
    double* gx = grad_x->row(i);
    for (std::size_t j = 0; j < m; ++j) gx[j] += yi[j] * (gi[j] - inner);
  }
}

void glorot_init(Tensor& W, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (std::size_t i = 0; i < W.size(); ++i) W[i] = rng.uniform(-bound, bound);
}

}  // namespace step
