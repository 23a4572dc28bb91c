#include "trajkit/micronet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "trajkit/error.hpp"
#include "trajkit/kernels.hpp"
#include "trajkit/rng.hpp"

namespace trajkit {
namespace {

inline double silu(double z) { return z / (1.0 + std::exp(-z)); }

inline double silu_grad(double z) {
  const double s = 1.0 / (1.0 + std::exp(-z));
  return s * (1.0 + z * (1.0 - s));
}

}  // namespace

std::vector<std::size_t> MicroNetSpec::widths() const {
  std::vector<std::size_t> w{input_dim()};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out_dim);
  return w;
}

MicroNet::MicroNet(MicroNetSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  if (spec_.x_dim == 0 || spec_.out_dim == 0) fail(ErrorKind::Argument, "MicroNet: empty input or output");
  widths_ = spec_.widths();
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l + 1] == 0) fail(ErrorKind::Argument, "MicroNet: zero-width layer");
    offsets_.push_back(n);
    n += widths_[l + 1] * widths_[l] + widths_[l + 1];
  }
  params_.assign(n, 0.0);
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  const RngStream rng(seed, 0x6e6574ULL);
  std::vector<double> u;
  for (std::size_t l = 0; l < offsets_.size(); ++l) {
    const std::size_t rows = widths_[l + 1], cols = widths_[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    u.resize(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
      rng.uniforms(static_cast<std::uint32_t>(l << 16 | r), std::span(u).subspan(r * cols, cols),
                   Draw::Misc);
    }
    for (std::size_t i = 0; i < rows * cols; ++i) params_[offsets_[l] + i] = bound * (2.0 * u[i] - 1.0);
  }
}

void MicroNet::set_params(std::span<const double> p) {
  if (p.size() != params_.size()) {
    fail(ErrorKind::Argument, "MicroNet: parameter count " + std::to_string(p.size()) +
                                  ", expected " + std::to_string(params_.size()));
  }
  std::copy(p.begin(), p.end(), params_.begin());
  ++version_;
}

void MicroNet::time_features(double t, std::span<double> out) const {
  if (spec_.n_freq == 0) {
    out[0] = t;
    return;
  }
  double w = std::numbers::pi;
  for (std::size_t k = 0; k < spec_.n_freq; ++k, w *= 2.0) {
    out[2 * k] = std::sin(w * t);
    out[2 * k + 1] = std::cos(w * t);
  }
}

void MicroNet::check_io(std::span<const double> x, std::span<const double> cond,
                        std::span<double> out) const {
  if (params_.empty()) fail(ErrorKind::Usage, "MicroNet: network is not initialised");
  if (x.size() != spec_.x_dim || cond.size() != spec_.cond_dim || out.size() != spec_.out_dim) {
    fail(ErrorKind::Argument, "MicroNet: expected x/cond/out sizes " + std::to_string(spec_.x_dim) +
                                  "/" + std::to_string(spec_.cond_dim) + "/" +
                                  std::to_string(spec_.out_dim) + ", got " +
                                  std::to_string(x.size()) + "/" + std::to_string(cond.size()) +
                                  "/" + std::to_string(out.size()));
  }
}

void MicroNet::run(std::span<const double> x, double t, std::span<const double> cond,
                   std::span<double> out, GradientTape* tape) const {
  check_io(x, cond, out);
  const auto& K = kernels::active();
  std::vector<double> in(widths_[0]);
  std::copy(x.begin(), x.end(), in.begin());
  time_features(t, std::span(in).subspan(spec_.x_dim, spec_.time_features()));
  std::copy(cond.begin(), cond.end(), in.begin() + static_cast<std::ptrdiff_t>(widths_[0] - spec_.cond_dim));
  if (tape) {
    tape->net = this;
    tape->version = version_;
    tape->inputs.clear();
    tape->pre.clear();
  }
  const std::size_t L = offsets_.size();
  std::vector<double> z;
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t rows = widths_[l + 1], cols = widths_[l];
    const double* W = params_.data() + offsets_[l];
    z.assign(rows, 0.0);
    K.gemv(W, in.data(), W + rows * cols, z.data(), rows, cols);
    if (tape) tape->inputs.push_back(in);
    if (l + 1 == L) {
      std::copy(z.begin(), z.end(), out.begin());
      break;
    }
    if (tape) tape->pre.push_back(z);
    in.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) in[i] = silu(z[i]);
  }
}

void MicroNet::forward(std::span<const double> x, double t, std::span<const double> cond,
                       std::span<double> out) const {
  run(x, t, cond, out, nullptr);
}

void MicroNet::forward(std::span<const double> x, double t, std::span<const double> cond,
                       std::span<double> out, GradientTape& tape) const {
  run(x, t, cond, out, &tape);
}

std::vector<double> MicroNet::forward(std::span<const double> x, double t,
                                      std::span<const double> cond) const {
  std::vector<double> out(spec_.out_dim);
  run(x, t, cond, out, nullptr);
  return out;
}

void MicroNet::backward(const GradientTape& tape, std::span<const double> upstream,
                        std::span<double> grad_theta, std::span<double> grad_x) const {
  if (tape.net != this || tape.version != version_ || tape.inputs.size() != offsets_.size()) {
    fail(ErrorKind::Usage, "MicroNet: gradient tape is stale or belongs to another network");
  }
  if (upstream.size() != spec_.out_dim) fail(ErrorKind::Argument, "MicroNet: upstream size mismatch");
  if (!grad_theta.empty() && grad_theta.size() != params_.size()) {
    fail(ErrorKind::Argument, "MicroNet: grad_theta size mismatch");
  }
  if (!grad_x.empty() && grad_x.size() != spec_.x_dim) {
    fail(ErrorKind::Argument, "MicroNet: grad_x size mismatch");
  }
  const auto& K = kernels::active();
  std::vector<double> g(upstream.begin(), upstream.end());
  std::vector<double> gin;
  for (std::size_t l = offsets_.size(); l-- > 0;) {
    const std::size_t rows = widths_[l + 1], cols = widths_[l];
    const double* W = params_.data() + offsets_[l];
    if (!grad_theta.empty()) {
      double* gW = grad_theta.data() + offsets_[l];
      K.ger_acc(gW, g.data(), tape.inputs[l].data(), rows, cols);
      double* gb = gW + rows * cols;
      for (std::size_t i = 0; i < rows; ++i) gb[i] += g[i];
    }
    if (l == 0 && grad_x.empty()) break;
    gin.assign(cols, 0.0);
    K.gemv_t_acc(W, g.data(), gin.data(), rows, cols);
    if (l > 0) {
      const auto& z = tape.pre[l - 1];
      for (std::size_t i = 0; i < cols; ++i) gin[i] *= silu_grad(z[i]);
    }
    g.swap(gin);
  }
  if (!grad_x.empty()) std::copy_n(g.begin(), spec_.x_dim, grad_x.begin());
}

Adam::Adam(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {
  if (!(cfg_.lr >= 0.0)) fail(ErrorKind::Argument, "Adam: learning rate must be >= 0");
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    fail(ErrorKind::Argument, "Adam: size mismatch");
  }
  ++t_;
  const kernels::AdamStep s{cfg_.lr,
                            cfg_.beta1,
                            cfg_.beta2,
                            cfg_.eps,
                            1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)),
                            1.0 - std::pow(cfg_.beta2, static_cast<double>(t_))};
  kernels::active().adam(params.data(), grad.data(), m_.data(), v_.data(), params.size(), s);
}

}  // namespace trajkit
