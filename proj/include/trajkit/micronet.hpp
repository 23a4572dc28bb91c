#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trajkit/oracle.hpp"

namespace trajkit {

struct MicroNetSpec {
  std::size_t x_dim = 2;
  std::size_t cond_dim = 0;
  std::size_t out_dim = 2;
  std::vector<std::size_t> hidden{64, 64};
  /// Sinusoidal time features with frequencies pi * 2^k, k = 0..n_freq-1.
  /// Zero appends raw t as a single feature instead.
  std::size_t n_freq = 8;

  std::size_t time_features() const { return n_freq == 0 ? 1 : 2 * n_freq; }
  std::size_t input_dim() const { return x_dim + time_features() + cond_dim; }
  std::vector<std::size_t> widths() const;
  bool operator==(const MicroNetSpec&) const = default;
};

class MicroNet;

/// Activations recorded by a forward pass, consumed by MicroNet::backward.
struct GradientTape {
  const MicroNet* net = nullptr;
  std::uint64_t version = 0;
  std::vector<std::vector<double>> inputs;  // input to each layer
  std::vector<std::vector<double>> pre;     // pre-activations of each hidden layer
};

/// Fully connected SiLU network, eps_theta(x, t, cond). Input layout is
/// [x, time features, cond]. Parameters are one flat vector, layer by layer,
/// each layer W (row-major, out x in) then b.
class MicroNet {
 public:
  MicroNet() = default;
  MicroNet(MicroNetSpec spec, std::uint64_t seed);

  const MicroNetSpec& spec() const noexcept { return spec_; }
  std::size_t param_count() const noexcept { return params_.size(); }
  std::span<const double> params() const noexcept { return params_; }
  /// Invalidates outstanding tapes.
  std::span<double> mutable_params() noexcept {
    ++version_;
    return params_;
  }
  void set_params(std::span<const double> p);

  void forward(std::span<const double> x, double t, std::span<const double> cond,
               std::span<double> out) const;
  void forward(std::span<const double> x, double t, std::span<const double> cond,
               std::span<double> out, GradientTape& tape) const;
  std::vector<double> forward(std::span<const double> x, double t,
                              std::span<const double> cond = {}) const;

  /// grad_theta += J_theta^T upstream; grad_x = J_x^T upstream (overwritten).
  /// Either output may be empty to skip it.
  void backward(const GradientTape& tape, std::span<const double> upstream,
                std::span<double> grad_theta, std::span<double> grad_x) const;

  void time_features(double t, std::span<double> out) const;

 private:
  void check_io(std::span<const double> x, std::span<const double> cond,
                std::span<double> out) const;
  void run(std::span<const double> x, double t, std::span<const double> cond,
           std::span<double> out, GradientTape* tape) const;

  MicroNetSpec spec_;
  std::vector<std::size_t> widths_;
  std::vector<std::size_t> offsets_;  // start of each layer's W
  std::vector<double> params_;
  std::uint64_t version_ = 0;
};

/// Adapts a MicroNet with out_dim == x_dim to the oracle interface.
class NetOracle final : public EpsOracle {
 public:
  explicit NetOracle(const MicroNet& net) : net_(net) {}
  std::size_t dim() const override { return net_.spec().x_dim; }
  std::size_t cond_dim() const override { return net_.spec().cond_dim; }
  using EpsOracle::eps;
  void eps(std::span<const double> x, double t, std::span<const double> cond,
           std::span<double> out) const override {
    net_.forward(x, t, cond, out);
  }

 private:
  const MicroNet& net_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(std::size_t n, AdamConfig cfg = {});
  void step(std::span<double> params, std::span<const double> grad);
  std::uint64_t steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

}  // namespace trajkit
