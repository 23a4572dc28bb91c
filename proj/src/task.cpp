#include "trajkit/task.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "trajkit/error.hpp"

namespace trajkit {
namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

std::string join(std::span<const double> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += g17(v[i]);
  }
  return s;
}

}  // namespace

DegradationOp DegradationOp::scaled(std::size_t dim, double a, double noise_std) {
  DegradationOp op;
  op.dim = dim;
  op.A.assign(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) op.A[i * dim + i] = a;
  op.b.assign(dim, 0.0);
  op.noise_std = noise_std;
  return op;
}

void DegradationOp::validate() const {
  if (dim == 0 || dim > kMaxTaskDim) fail(ErrorKind::Argument, "degradation: dimension must be in [1, 16]");
  if (A.size() != dim * dim || b.size() != dim) fail(ErrorKind::Argument, "degradation: A/b size mismatch");
  for (double v : A) {
    if (!std::isfinite(v)) fail(ErrorKind::Argument, "degradation: A must be finite");
  }
  if (!(noise_std >= 0.0)) fail(ErrorKind::Argument, "degradation: noise_std must be >= 0");
}

void degrade(const DegradationOp& op, std::span<const double> x, std::span<const double> z,
             std::span<double> y) {
  if (x.size() != op.dim || y.size() != op.dim || z.size() != op.dim) {
    fail(ErrorKind::Argument, "degrade: dimension mismatch (operator is " + std::to_string(op.dim) +
                                  "-dimensional, x has " + std::to_string(x.size()) + ")");
  }
  for (std::size_t i = 0; i < op.dim; ++i) {
    double acc = op.b[i];
    for (std::size_t j = 0; j < op.dim; ++j) acc += op.A[i * op.dim + j] * x[j];
    y[i] = acc + op.noise_std * z[i];
  }
}

std::vector<double> degrade(const DegradationOp& op, std::span<const double> x,
                            const RngStream& rng, std::uint32_t step) {
  std::vector<double> z(op.dim), y(op.dim);
  rng.gaussians(step, z, Draw::Data);
  degrade(op, x, z, y);
  return y;
}

void draw_clean(DatasetKind kind, const RngStream& rng, std::span<double> x) {
  double u[2];
  double g[2];
  switch (kind) {
    case DatasetKind::GaussianShift:
      rng.gaussians(0, x, Draw::Data);
      for (double& v : x) v += 2.0;
      return;
    case DatasetKind::Ring: {
      if (x.size() != 2) fail(ErrorKind::Argument, "ring dataset is two-dimensional");
      rng.uniforms(0, u, Draw::Data);
      rng.gaussians(2, g, Draw::Data);
      const double theta = 2.0 * std::numbers::pi * u[0];
      const double r = 1.0 + 0.05 * g[0];
      x[0] = r * std::cos(theta);
      x[1] = r * std::sin(theta);
      return;
    }
    case DatasetKind::TwoMoons: {
      if (x.size() != 2) fail(ErrorKind::Argument, "two_moons dataset is two-dimensional");
      rng.uniforms(0, u, Draw::Data);
      rng.gaussians(2, g, Draw::Data);
      const double theta = std::numbers::pi * u[0];
      if (u[1] < 0.5) {
        x[0] = std::cos(theta);
        x[1] = std::sin(theta);
      } else {
        x[0] = 1.0 - std::cos(theta);
        x[1] = 0.5 - std::sin(theta);
      }
      x[0] += 0.05 * g[0];
      x[1] += 0.05 * g[1];
      return;
    }
  }
}

ToyDataset gen_dataset(DatasetKind kind, std::size_t n, const DegradationOp& op,
                       std::uint64_t seed) {
  if (n == 0) fail(ErrorKind::Argument, "gen_dataset: n must be >= 1");
  op.validate();
  if (kind != DatasetKind::GaussianShift && op.dim != 2) {
    fail(ErrorKind::Argument, std::string("gen_dataset: ") + to_string(kind) + " is two-dimensional");
  }
  ToyDataset ds;
  ds.kind = kind;
  ds.seed = seed;
  ds.op = op;
  ds.x_star.resize(n);
  ds.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const RngStream rng(seed, i);
    ds.x_star[i].resize(op.dim);
    draw_clean(kind, rng, ds.x_star[i]);
    ds.y[i] = degrade(op, ds.x_star[i], rng, 1);
  }
  return ds;
}

const char* to_string(DatasetKind kind) noexcept {
  switch (kind) {
    case DatasetKind::GaussianShift: return "gaussian_shift";
    case DatasetKind::Ring: return "ring";
    case DatasetKind::TwoMoons: return "two_moons";
  }
  return "?";
}

DatasetKind parse_dataset_kind(const std::string& s) {
  if (s == "gaussian_shift") return DatasetKind::GaussianShift;
  if (s == "ring") return DatasetKind::Ring;
  if (s == "two_moons") return DatasetKind::TwoMoons;
  fail(ErrorKind::Config, "unknown dataset kind '" + s + "'");
}

double mse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) fail(ErrorKind::Argument, "mse: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double reward(const RewardSpec& spec, std::span<const double> x_hat, std::span<const double> x_star) {
  const double m = mse(x_hat, x_star);
  if (spec.kind == RewardKind::NegMse) return -m;
  return 10.0 * std::log10(spec.data_range * spec.data_range / std::max(m, 1e-12));
}

double divergence(const DivergenceSpec& spec, std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorKind::Argument, "divergence: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += spec.kind == DivergenceKind::SqL2 ? d * d : std::abs(d);
  }
  return s;
}

RewardKind parse_reward_kind(const std::string& s) {
  if (s == "neg_mse") return RewardKind::NegMse;
  if (s == "psnr_like") return RewardKind::PsnrLike;
  fail(ErrorKind::Config, "unknown reward '" + s + "'");
}

DivergenceKind parse_divergence_kind(const std::string& s) {
  if (s == "sq_l2") return DivergenceKind::SqL2;
  if (s == "l1") return DivergenceKind::L1;
  fail(ErrorKind::Config, "unknown divergence '" + s + "'");
}

const char* to_string(RewardKind kind) noexcept {
  return kind == RewardKind::NegMse ? "neg_mse" : "psnr_like";
}

const char* to_string(DivergenceKind kind) noexcept {
  return kind == DivergenceKind::SqL2 ? "sq_l2" : "l1";
}

void write_dataset(std::ostream& os, const ToyDataset& ds) {
  os << "# kind=" << to_string(ds.kind) << " n=" << ds.size() << " seed=" << ds.seed
     << " dim=" << ds.dim() << " noise_std=" << g17(ds.op.noise_std) << " A=" << join(ds.op.A)
     << " b=" << join(ds.op.b) << "\n";
  for (std::size_t k = 0; k < ds.dim(); ++k) os << (k ? "," : "") << "x" << k;
  for (std::size_t k = 0; k < ds.dim(); ++k) os << ",y" << k;
  os << "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t k = 0; k < ds.dim(); ++k) os << (k ? "," : "") << g17(ds.x_star[i][k]);
    for (std::size_t k = 0; k < ds.dim(); ++k) os << "," << g17(ds.y[i][k]);
    os << "\n";
  }
}

ToyDataset read_dataset(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) {
    fail(ErrorKind::Artifact, "dataset: missing header line");
  }
  std::map<std::string, std::string> kv;
  std::stringstream hs(line.substr(2));
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"kind", "n", "seed", "dim", "noise_std", "A", "b"}) {
    if (!kv.count(key)) fail(ErrorKind::Artifact, std::string("dataset: header lacks ") + key);
  }
  ToyDataset ds;
  ds.kind = parse_dataset_kind(kv["kind"]);
  ds.seed = std::stoull(kv["seed"]);
  ds.op.dim = std::stoul(kv["dim"]);
  ds.op.noise_std = std::stod(kv["noise_std"]);
  ds.op.A = parse_list(kv["A"]);
  ds.op.b = parse_list(kv["b"]);
  ds.op.validate();
  const std::size_t n = std::stoul(kv["n"]);
  std::getline(is, line);  // column names
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(is, line)) fail(ErrorKind::Artifact, "dataset: truncated at row " + std::to_string(i));
    std::stringstream rs(line);
    std::vector<double> row;
    while (std::getline(rs, tok, ',')) row.push_back(std::stod(tok));
    if (row.size() != 2 * ds.dim()) fail(ErrorKind::Artifact, "dataset: malformed row " + std::to_string(i));
    ds.x_star.emplace_back(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(ds.dim()));
    ds.y.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(ds.dim()), row.end());
  }
  return ds;
}

}  // namespace trajkit
