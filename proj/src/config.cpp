#include "trajkit/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "trajkit/error.hpp"

namespace trajkit {
namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw std::invalid_argument("expected a number");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) {
    throw std::invalid_argument("expected a non-negative integer");
  }
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("expected true or false");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
  if (out.empty() || (out.size() == 1 && out[0].empty())) throw std::invalid_argument("expected a non-empty list");
  return out;
}

std::vector<double> to_doubles(const std::string& s) {
  std::vector<double> v;
  for (const auto& t : split_list(s)) v.push_back(to_double(t));
  return v;
}

std::vector<std::size_t> to_sizes(const std::string& s) {
  std::vector<std::size_t> v;
  for (const auto& t : split_list(s)) v.push_back(static_cast<std::size_t>(to_u64(t)));
  return v;
}

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>) {
      s += g17(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

using Setter = std::function<void(const std::string&)>;
using SectionTable = std::map<std::string, Setter>;

std::map<std::string, SectionTable> setters(RunConfig& c) {
  std::map<std::string, SectionTable> m;
  auto d = [](double& f) -> Setter { return [&f](const std::string& s) { f = to_double(s); }; };
  auto z = [](std::size_t& f) -> Setter { return [&f](const std::string& s) { f = static_cast<std::size_t>(to_u64(s)); }; };
  auto b = [](bool& f) -> Setter { return [&f](const std::string& s) { f = to_bool(s); }; };

  m["run"] = {{"seed", [&c](const std::string& s) { c.seed = to_u64(s); }}};

  auto& sc = c.schedule;
  m["schedule"] = {{"kind", [&sc](const std::string& s) { sc.kind = parse_schedule_kind(s); }},
                   {"t_min", d(sc.t_min)},
                   {"t_max", d(sc.t_max)},
                   {"lambda_max", d(sc.lambda_max)},
                   {"lambda_min", d(sc.lambda_min)},
                   {"sigma_min", d(sc.sigma_min)},
                   {"sigma_max", d(sc.sigma_max)}};

  auto& o = c.oracle;
  m["oracle"] = {{"kind", [&o](const std::string& s) {
                    if (s != "gaussian" && s != "net") throw std::invalid_argument("expected gaussian or net");
                    o.kind = s;
                  }},
                 {"mean", [&o](const std::string& s) { o.mean = to_doubles(s); }},
                 {"scale", d(o.scale)},
                 {"hidden", [&o](const std::string& s) { o.hidden = to_sizes(s); }},
                 {"n_freq", z(o.n_freq)},
                 {"conditional", b(o.conditional)},
                 {"pretrain", b(o.pretrain)},
                 {"train_steps", z(o.train_steps)},
                 {"train_batch", z(o.train_batch)},
                 {"lr", d(o.lr)},
                 {"checkpoint", [&o](const std::string& s) { o.checkpoint = s; }}};

  auto& t = c.task;
  m["task"] = {{"kind", [&t](const std::string& s) { t.kind = parse_dataset_kind(s); }},
               {"n", z(t.n)},
               {"test_n", z(t.test_n)},
               {"dim", z(t.dim)},
               {"scale", d(t.scale)},
               {"noise_std", d(t.noise_std)}};

  auto& sm = c.sample;
  m["sample"] = {{"solver", [&sm](const std::string& s) { sm.solver = parse_solver_kind(s); }},
                 {"steps", z(sm.steps)},
                 {"n", z(sm.n)},
                 {"gamma", d(sm.gamma)},
                 {"noise", [&sm](const std::string& s) { sm.noise = parse_noise_coefficient(s); }},
                 {"alpha_mod", d(sm.alpha_mod)}};

  auto& a = c.align;
  m["align"] = {{"n_candidates", z(a.n_candidates)},
                {"reward", [&a](const std::string& s) { a.reward = parse_reward_kind(s); }},
                {"data_range", d(a.data_range)},
                {"divergence", [&a](const std::string& s) { a.divergence = parse_divergence_kind(s); }},
                {"iterations", z(a.iterations)},
                {"steps", z(a.steps)},
                {"anchor_weight", d(a.anchor_weight)},
                {"gamma_explore", d(a.gamma_explore)},
                {"gamma_max", d(a.gamma_max)},
                {"lr", d(a.lr)},
                {"mod_lr", d(a.mod_lr)},
                {"mod_hidden", [&a](const std::string& s) { a.mod_hidden = to_sizes(s); }},
                {"noise", [&a](const std::string& s) { a.noise = parse_noise_coefficient(s); }},
                {"max_skips", z(a.max_skips)}};

  auto& ds = c.distill;
  m["distill"] = {{"k", z(ds.k)},
                  {"delta", d(ds.delta)},
                  {"w", d(ds.w)},
                  {"interp", b(ds.interp)},
                  {"teacher_steps", z(ds.teacher_steps)},
                  {"mix_ratio", d(ds.mix_ratio)},
                  {"snr_threshold", d(ds.snr_threshold)},
                  {"iterations", z(ds.iterations)},
                  {"batch", z(ds.batch)},
                  {"lr", d(ds.lr)},
                  {"max_skips", z(ds.max_skips)}};

  auto& cs = c.cost;
  m["cost"] = {{"k", [&cs](const std::string& s) { cs.k = to_sizes(s); }},
               {"dense_steps", z(cs.dense_steps)},
               {"n", z(cs.n)}};

  m["output"] = {{"dir", [&c](const std::string& s) { c.output.dir = s; }}};
  return m;
}

/// Line of each "section.key" and each "[section]" in the raw text.
std::map<std::string, std::size_t> line_index(const std::string& text) {
  std::map<std::string, std::size_t> idx;
  std::stringstream ss(text);
  std::string line, section;
  for (std::size_t n = 1; std::getline(ss, line); ++n) {
    line = trim(line);
    if (line.empty() || line[0] == ';' || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      idx.emplace("[" + section + "]", n);
    } else if (auto eq = line.find('='); eq != std::string::npos) {
      idx.emplace(section + "." + trim(line.substr(0, eq)), n);
    }
  }
  return idx;
}

[[noreturn]] void config_fail(const std::map<std::string, std::size_t>& lines, const std::string& where,
                              const std::string& msg) {
  std::string loc;
  if (auto it = lines.find(where); it != lines.end()) loc = "line " + std::to_string(it->second) + ": ";
  fail(ErrorKind::Config, "config: " + loc + where + ": " + msg);
}

void validate(const RunConfig& c) {
  auto bad = [](const std::string& where, const std::string& msg) {
    fail(ErrorKind::Config, "config: " + where + ": " + msg);
  };
  try {
    NoiseSchedule s(c.schedule);
  } catch (const Error& e) {
    bad("schedule", e.what());
  }
  if (c.task.dim == 0 || c.task.dim > kMaxTaskDim) bad("task.dim", "must lie in [1, 16]");
  if (c.task.n == 0) bad("task.n", "must be positive");
  if (c.oracle.kind == "gaussian" && c.oracle.mean.size() != c.task.dim) {
    bad("oracle.mean", "length must equal task.dim");
  }
  if (!(c.oracle.scale > 0.0)) bad("oracle.scale", "must be positive");
  if (c.sample.steps == 0) bad("sample.steps", "must be positive");
  if (c.sample.gamma < 0.0) bad("sample.gamma", "must be non-negative");
  if (c.align.n_candidates < 2) bad("align.n_candidates", "must be at least 2");
  if (c.align.steps == 0) bad("align.steps", "must be positive");
  if (!(c.align.gamma_max > 0.0)) bad("align.gamma_max", "must be positive");
  if (c.distill.k == 0) bad("distill.k", "must be positive");
  if (c.distill.batch == 0) bad("distill.batch", "must be positive");
  if (c.distill.mix_ratio < 0.0 || c.distill.mix_ratio > 1.0) bad("distill.mix_ratio", "must lie in [0, 1]");
  for (auto k : c.cost.k) {
    if (k == 0 || k > c.cost.dense_steps) bad("cost.k", "entries must lie in [1, dense_steps]");
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  {
    std::istringstream is(text);
    try {
      pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
      fail(ErrorKind::Config, "config: line " + std::to_string(e.line()) + ": " + e.message());
    }
  }
  const auto lines = line_index(text);
  RunConfig cfg;
  auto table = setters(cfg);
  for (const auto& [section, node] : tree) {
    auto sit = table.find(section);
    if (sit == table.end()) {
      if (node.empty()) config_fail(lines, section, "key outside any section");
      config_fail(lines, "[" + section + "]", "unknown section");
    }
    for (const auto& [key, leaf] : node) {
      const std::string where = section + "." + key;
      auto kit = sit->second.find(key);
      if (kit == sit->second.end()) config_fail(lines, where, "unknown key");
      try {
        kit->second(trim(leaf.data()));
      } catch (const std::exception& e) {
        config_fail(lines, where, std::string("invalid value '") + leaf.data() + "': " + e.what());
      }
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Artifact, "config: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  os << "[run]\nseed = " << c.seed << "\n\n";
  const auto& s = c.schedule;
  os << "[schedule]\nkind = " << to_string(s.kind) << "\nt_min = " << g17(s.t_min) << "\nt_max = " << g17(s.t_max)
     << "\nlambda_max = " << g17(s.lambda_max) << "\nlambda_min = " << g17(s.lambda_min)
     << "\nsigma_min = " << g17(s.sigma_min) << "\nsigma_max = " << g17(s.sigma_max) << "\n\n";
  const auto& o = c.oracle;
  os << "[oracle]\nkind = " << o.kind << "\nmean = " << join(o.mean) << "\nscale = " << g17(o.scale)
     << "\nhidden = " << join(o.hidden) << "\nn_freq = " << o.n_freq
     << "\nconditional = " << (o.conditional ? "true" : "false") << "\npretrain = " << (o.pretrain ? "true" : "false")
     << "\ntrain_steps = " << o.train_steps << "\ntrain_batch = " << o.train_batch << "\nlr = " << g17(o.lr)
     << "\ncheckpoint = " << o.checkpoint << "\n\n";
  const auto& t = c.task;
  os << "[task]\nkind = " << to_string(t.kind) << "\nn = " << t.n << "\ntest_n = " << t.test_n << "\ndim = " << t.dim
     << "\nscale = " << g17(t.scale) << "\nnoise_std = " << g17(t.noise_std) << "\n\n";
  const auto& sm = c.sample;
  os << "[sample]\nsolver = " << to_string(sm.solver) << "\nsteps = " << sm.steps << "\nn = " << sm.n
     << "\ngamma = " << g17(sm.gamma) << "\nnoise = " << to_string(sm.noise) << "\nalpha_mod = " << g17(sm.alpha_mod)
     << "\n\n";
  const auto& a = c.align;
  os << "[align]\nn_candidates = " << a.n_candidates << "\nreward = " << to_string(a.reward)
     << "\ndata_range = " << g17(a.data_range) << "\ndivergence = " << to_string(a.divergence)
     << "\niterations = " << a.iterations << "\nsteps = " << a.steps << "\nanchor_weight = " << g17(a.anchor_weight)
     << "\ngamma_explore = " << g17(a.gamma_explore) << "\ngamma_max = " << g17(a.gamma_max) << "\nlr = " << g17(a.lr) << "\nmod_lr = " << g17(a.mod_lr)
     << "\nmod_hidden = " << join(a.mod_hidden) << "\nnoise = " << to_string(a.noise)
     << "\nmax_skips = " << a.max_skips << "\n\n";
  const auto& d = c.distill;
  os << "[distill]\nk = " << d.k << "\ndelta = " << g17(d.delta) << "\nw = " << g17(d.w)
     << "\ninterp = " << (d.interp ? "true" : "false") << "\nteacher_steps = " << d.teacher_steps
     << "\nmix_ratio = " << g17(d.mix_ratio) << "\nsnr_threshold = " << g17(d.snr_threshold)
     << "\niterations = " << d.iterations << "\nbatch = " << d.batch << "\nlr = " << g17(d.lr)
     << "\nmax_skips = " << d.max_skips << "\n\n";
  os << "[cost]\nk = " << join(c.cost.k) << "\ndense_steps = " << c.cost.dense_steps << "\nn = " << c.cost.n << "\n\n";
  os << "[output]\ndir = " << c.output.dir << "\n";
  return os.str();
}

AlignConfig to_align_config(const RunConfig& c) {
  AlignConfig a;
  a.n_candidates = c.align.n_candidates;
  a.reward = RewardSpec{c.align.reward, c.align.data_range};
  a.divergence = DivergenceSpec{c.align.divergence};
  a.adam.lr = c.align.lr;
  a.mod_adam.lr = c.align.mod_lr;
  a.iterations = c.align.iterations;
  a.steps = c.align.steps;
  a.anchor_weight = c.align.anchor_weight;
  a.gamma_explore = c.align.gamma_explore;
  a.gamma_max = c.align.gamma_max;
  a.noise = c.align.noise;
  a.seed = c.seed;
  a.max_skips = c.align.max_skips;
  return a;
}

DistillConfig to_distill_config(const RunConfig& c) {
  DistillConfig d;
  d.k = c.distill.k;
  d.delta = c.distill.delta;
  d.w = c.distill.w;
  d.interp = c.distill.interp;
  d.teacher_steps = c.distill.teacher_steps;
  d.mix_ratio = c.distill.mix_ratio;
  d.snr_threshold = c.distill.snr_threshold;
  d.iterations = c.distill.iterations;
  d.batch = c.distill.batch;
  d.adam.lr = c.distill.lr;
  d.seed = c.seed;
  d.max_skips = c.distill.max_skips;
  return d;
}

TrainConfig to_train_config(const RunConfig& c) {
  TrainConfig t;
  t.steps = c.oracle.train_steps;
  t.batch = c.oracle.train_batch;
  t.adam.lr = c.oracle.lr;
  t.seed = c.seed;
  return t;
}

DegradationOp to_degradation(const RunConfig& c) {
  return DegradationOp::scaled(c.task.dim, c.task.scale, c.task.noise_std);
}

MicroNetSpec oracle_net_spec(const RunConfig& c) {
  MicroNetSpec s;
  s.x_dim = c.task.dim;
  s.out_dim = c.task.dim;
  s.cond_dim = c.oracle.conditional ? c.task.dim : 0;
  s.hidden = c.oracle.hidden;
  s.n_freq = c.oracle.n_freq;
  return s;
}

}  // namespace trajkit
