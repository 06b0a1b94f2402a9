#pragma once

#include "step/rng.hpp"
#include "step/tensor.hpp"

namespace step {

// Layer primitives. Each forward has a hand-written backward; a general
// tape buys nothing for a short fixed pipeline, so there is none.
//
// Backward functions ACCUMULATE into the gradient outputs (+=), so a
// caller can fan gradients in from several uses of the same tensor.

// y = x W^T + b. x: (n, in), W: (out, in), b: (out) or null. Returns (n, out).
Tensor affine(const Tensor& x, const Tensor& W, const Tensor* b);

// Gradients of affine. grad_out: (n, out). Any output pointer may be null.
void affine_backward(const Tensor& x, const Tensor& W, const Tensor& grad_out,
                     Tensor* grad_x, Tensor* grad_W, Tensor* grad_b);

enum class Elementwise { kRelu, kSigmoid, kCos };

// Elementwise map of any-shaped tensor. Sigmoid uses the two-branch form,
// stable for |x| up to ~700 in 64-bit.
Tensor elementwise(Elementwise kind, const Tensor& x);
double elementwise_scalar(Elementwise kind, double x);

// Accumulates d(loss)/dx into grad_x given x, y = f(x), and d(loss)/dy.
void elementwise_backward(Elementwise kind, const Tensor& x, const Tensor& y,
                          const Tensor& grad_out, Tensor* grad_x);

// Row-wise softmax of a matrix, max-subtracted.
Tensor row_softmax(const Tensor& x);
void row_softmax_backward(const Tensor& y, const Tensor& grad_out, Tensor* grad_x);

inline double sigmoid(double x) { return elementwise_scalar(Elementwise::kSigmoid, x); }

// Glorot-uniform init in +-sqrt(6/(fan_in+fan_out)); biases stay zero.
void glorot_init(Tensor& W, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// Low-level helpers shared by the layer code.
// y (len out) = W (out, in) * x (len in); accumulate toggles += vs =.
void matvec(const Tensor& W, const double* x, double* y, bool accumulate);
// x_grad (len in) += W^T (in, out) * g (len out).
void matvec_transposed_acc(const Tensor& W, const double* g, double* x_grad);
double dot(const double* a, const double* b, std::size_t n);

}  // namespace step
