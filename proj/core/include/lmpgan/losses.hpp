#pragma once

#include "lmpgan/tensor.hpp"

namespace lmpgan {

// Strict trichotomy sign: -1, 0, +1.
int sign_of(double x);

// Binary cross-entropy of a predicted probability k against label s,
// -[s ln k + (1-s) ln(1-k)], with k clamped to [1e-7, 1 - 1e-7].
double loss_bce(double k, double s);
// d/dk of the above; 0 where the clamp is active.
double loss_bce_grad(double k, double s);

// Discriminator objective: bce(d_real, 1) + bce(d_fake, 0).
double loss_d(double d_real, double d_fake);

// Entry-wise p-norm distance ||yhat - y||_p^p, p in {1, 2}.
double loss_lp(const nn::Tensor& yhat, const nn::Tensor& y, int p);
nn::Tensor loss_lp_grad(const nn::Tensor& yhat, const nn::Tensor& y, int p);

// Gradient difference loss over a [M, N] (or [M, N, 1]) frame pair:
// sum over valid neighbor pairs of ||dY| - |dYhat||^alpha for vertical
// and horizontal differences. alpha >= 1 integer.
double loss_gdl(const nn::Tensor& yhat, const nn::Tensor& y, int alpha);
// Subgradient w.r.t. yhat (0 at ties).
nn::Tensor loss_gdl_grad(const nn::Tensor& yhat, const nn::Tensor& y, int alpha);

// Direction-changing loss: per pixel |sgn(yhat - x_last) - sgn(y - x_last)|,
// each term in {0, 1, 2}. Piecewise constant, so its gradient is zero
// almost everywhere and it contributes no descent direction.
double loss_dcl(const nn::Tensor& yhat, const nn::Tensor& y, const nn::Tensor& x_last);

}  // namespace lmpgan
