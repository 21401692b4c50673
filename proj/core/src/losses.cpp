#include "lmpgan/losses.hpp"

#include <cmath>

#include "lmpgan/errors.hpp"

namespace lmpgan {

namespace {

constexpr double kBceEps = 1e-7;

void require_same_shape(const nn::Tensor& a, const nn::Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ConfigError(std::string(what) + ": shape mismatch " + nn::shape_string(a.shape()) +
                      " vs " + nn::shape_string(b.shape()));
  }
}

// Frames are [M, N] or [M, N, 1]; returns M, N and validates.
void frame_dims(const nn::Tensor& t, std::size_t& m, std::size_t& n, const char* what) {
  if (t.rank() == 2) {
    m = t.dim(0);
    n = t.dim(1);
    return;
  }
  if (t.rank() == 3 && t.dim(2) == 1) {
    m = t.dim(0);
    n = t.dim(1);
    return;
  }
  throw ConfigError(std::string(what) + ": expected a [M,N] or [M,N,1] frame, got " +
                    nn::shape_string(t.shape()));
}

}  // namespace

int sign_of(double x) { return x < 0.0 ? -1 : (x > 0.0 ? 1 : 0); }

double loss_bce(double k, double s) {
  if (k < kBceEps) k = kBceEps;
  if (k > 1.0 - kBceEps) k = 1.0 - kBceEps;
  return -(s * std::log(k) + (1.0 - s) * std::log(1.0 - k));
}

double loss_bce_grad(double k, double s) {
  if (k < kBceEps || k > 1.0 - kBceEps) return 0.0;  // clamp region is flat
  return (k - s) / (k * (1.0 - k));
}

double loss_d(double d_real, double d_fake) {
  return loss_bce(d_real, 1.0) + loss_bce(d_fake, 0.0);
}

double loss_lp(const nn::Tensor& yhat, const nn::Tensor& y, int p) {
  require_same_shape(yhat, y, "loss_lp");
  if (p != 1 && p != 2) throw ConfigError("loss_lp: p must be 1 or 2");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = yhat[i] - y[i];
    acc += (p == 2) ? d * d : std::abs(d);
  }
  return acc;
}

nn::Tensor loss_lp_grad(const nn::Tensor& yhat, const nn::Tensor& y, int p) {
  require_same_shape(yhat, y, "loss_lp");
  if (p != 1 && p != 2) throw ConfigError("loss_lp: p must be 1 or 2");
  nn::Tensor g(yhat.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = yhat[i] - y[i];
    g[i] = (p == 2) ? 2.0 * d : static_cast<double>(sign_of(d));
  }
  return g;
}

double loss_gdl(const nn::Tensor& yhat, const nn::Tensor& y, int alpha) {
  require_same_shape(yhat, y, "loss_gdl");
  if (alpha < 1) throw ConfigError("loss_gdl: alpha must be a positive integer");
  std::size_t m, n;
  frame_dims(y, m, n, "loss_gdl");
  auto at = [n](const nn::Tensor& t, std::size_t i, std::size_t j) {
    return t[i * n + j];  // contiguous for both supported shapes
  };
  double acc = 0.0;
  auto term = [alpha](double dy, double dyh) {
    const double v = std::abs(dy) - std::abs(dyh);
    return std::pow(std::abs(v), alpha);
  };
  for (std::size_t i = 1; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      acc += term(at(y, i, j) - at(y, i - 1, j), at(yhat, i, j) - at(yhat, i - 1, j));
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 1; j < n; ++j) {
      acc += term(at(y, i, j - 1) - at(y, i, j), at(yhat, i, j - 1) - at(yhat, i, j));
    }
  }
  return acc;
}

nn::Tensor loss_gdl_grad(const nn::Tensor& yhat, const nn::Tensor& y, int alpha) {
  require_same_shape(yhat, y, "loss_gdl");
  if (alpha < 1) throw ConfigError("loss_gdl: alpha must be a positive integer");
  std::size_t m, n;
  frame_dims(y, m, n, "loss_gdl");
  nn::Tensor g(yhat.shape());
  auto at = [n](const nn::Tensor& t, std::size_t i, std::size_t j) { return t[i * n + j]; };
  // d/d(dyh) of ||dy| - |dyh||^alpha; subgradient 0 at ties and at dyh = 0.
  auto dterm = [alpha](double dy, double dyh) {
    const double v = std::abs(dy) - std::abs(dyh);
    if (v == 0.0 || dyh == 0.0) return 0.0;
    const double outer =
        alpha == 1 ? static_cast<double>(sign_of(v))
                   : alpha * std::pow(std::abs(v), alpha - 1) * static_cast<double>(sign_of(v));
    return -outer * static_cast<double>(sign_of(dyh));
  };
  for (std::size_t i = 1; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = dterm(at(y, i, j) - at(y, i - 1, j), at(yhat, i, j) - at(yhat, i - 1, j));
      g[i * n + j] += d;
      g[(i - 1) * n + j] -= d;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 1; j < n; ++j) {
      const double d =
          dterm(at(y, i, j - 1) - at(y, i, j), at(yhat, i, j - 1) - at(yhat, i, j));
      g[i * n + (j - 1)] += d;
      g[i * n + j] -= d;
    }
  }
  return g;
}

double loss_dcl(const nn::Tensor& yhat, const nn::Tensor& y, const nn::Tensor& x_last) {
  require_same_shape(yhat, y, "loss_dcl");
  require_same_shape(yhat, x_last, "loss_dcl");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    acc += std::abs(sign_of(yhat[i] - x_last[i]) - sign_of(y[i] - x_last[i]));
  }
  return acc;
}

}  // namespace lmpgan
