#include "trajkit/trajectory_io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "trajkit/error.hpp"

namespace trajkit {

void write_trajectories(std::ostream& os, std::span<const Trajectory> trajs, std::size_t first_id,
                        bool header) {
  if (header) {
    os << "trajectory_id,step,t";
    const std::size_t d = trajs.empty() ? 0 : trajs[0].states[0].size();
    for (std::size_t k = 0; k < d; ++k) os << ",x" << k;
    os << "\n";
  }
  char buf[32];
  std::string line;
  for (std::size_t n = 0; n < trajs.size(); ++n) {
    const auto& tr = trajs[n];
    for (std::size_t s = 0; s < tr.states.size(); ++s) {
      line = std::to_string(first_id + n) + "," + std::to_string(s);
      std::snprintf(buf, sizeof buf, ",%.17g", tr.times[s]);
      line += buf;
      for (double v : tr.states[s]) {
        std::snprintf(buf, sizeof buf, ",%.17g", v);
        line += buf;
      }
      line += '\n';
      os << line;
    }
  }
}

std::vector<Trajectory> read_trajectories(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("trajectory_id,step,t", 0) != 0) {
    fail(ErrorKind::Artifact, "trajectory file: missing header");
  }
  std::vector<Trajectory> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> f;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() < 4) fail(ErrorKind::Artifact, "trajectory file: short row at line " + std::to_string(lineno));
    const std::size_t id = std::stoul(f[0]);
    const std::size_t step = std::stoul(f[1]);
    if (id == out.size()) out.emplace_back();
    if (id + 1 != out.size() || step != out.back().states.size()) {
      fail(ErrorKind::Artifact, "trajectory file: rows out of order at line " + std::to_string(lineno));
    }
    out.back().times.push_back(std::stod(f[2]));
    std::vector<double> x;
    for (std::size_t k = 3; k < f.size(); ++k) x.push_back(std::stod(f[k]));
    out.back().states.push_back(std::move(x));
  }
  return out;
}

}  // namespace trajkit
