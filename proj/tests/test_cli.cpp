#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "trajkit/checkpoint.hpp"

using namespace trajkit;
namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "trajkit_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_config(const std::string& name, const std::string& text) {
  const auto p = work_dir() / name;
  std::ofstream(p) << text;
  return p.string();
}

int run(const std::string& args) {
  const std::string cmd = std::string(TRAJKIT_CLI_PATH) + " " + args + " > " +
                          (work_dir() / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  std::size_t n = 0;
  for (char c : slurp(p)) n += c == '\n';
  return n;
}

std::string net_config(int align_iterations = 2) {
  return "[oracle]\nkind = net\nhidden = 16,16\nn_freq = 4\ntrain_steps = 40\ntrain_batch = 16\n"
         "[task]\nn = 32\ntest_n = 16\n"
         "[align]\nn_candidates = 3\nsteps = 4\nmod_hidden = 8\niterations = " +
         std::to_string(align_iterations) +
         "\n"
         "[distill]\niterations = 4\nbatch = 4\nteacher_steps = 8\n";
}

}  // namespace

TEST_CASE("one-step dpm1 writes start and end rows") {
  const auto cfg = write_config("gauss.ini", "[sample]\nn = 3\n");
  const auto out = work_dir() / "s1";
  REQUIRE(run("sample --config " + cfg + " --out " + out.string() + " --solver dpm1 --steps 1") == 0);
  CHECK(line_count(out / "trajectories.csv") == 1 + 3 * 2);
  CHECK(fs::exists(out / "summary.txt"));
}

TEST_CASE("m-sde with gamma zero reproduces dpm1 byte for byte") {
  const auto cfg = write_config("gauss.ini", "[sample]\nn = 20\n");
  const auto a = work_dir() / "dpm1", b = work_dir() / "msde0";
  REQUIRE(run("sample --config " + cfg + " --out " + a.string() + " --solver dpm1 --steps 12") == 0);
  REQUIRE(run("sample --config " + cfg + " --out " + b.string() + " --solver msde_vp --gamma 0 --steps 12") == 0);
  CHECK(slurp(a / "trajectories.csv") == slurp(b / "trajectories.csv"));
}

TEST_CASE("exit codes") {
  const auto bad = write_config("bad.ini", "[sample]\nstepz = 3\n");
  CHECK(run("sample --config " + bad) == 2);
  CHECK(run("sample --config " + (work_dir() / "none.ini").string()) == 4);
  CHECK(run("bogus") == 2);
  const auto net = write_config("net.ini", net_config());
  CHECK(run("sample --config " + net + " --checkpoint " + (work_dir() / "absent.ckpt").string()) == 4);
  std::ofstream(work_dir() / "junk.ckpt") << "not a checkpoint";
  CHECK(run("sample --config " + net + " --checkpoint " + (work_dir() / "junk.ckpt").string()) == 5);
}

TEST_CASE("align with zero iterations keeps the base weights") {
  const auto cfg0 = write_config("align0.ini", net_config(0));
  const auto first = work_dir() / "align_a", second = work_dir() / "align_b";
  REQUIRE(run("align --config " + cfg0 + " --out " + first.string()) == 0);
  const auto base = load_checkpoint((first / "align.ckpt").string());
  REQUIRE(run("align --config " + cfg0 + " --out " + second.string() + " --checkpoint " +
              (first / "align.ckpt").string()) == 0);
  const auto again = load_checkpoint((second / "align.ckpt").string());
  REQUIRE(base.oracle);
  REQUIRE(again.oracle);
  CHECK(std::equal(base.oracle->params().begin(), base.oracle->params().end(), again.oracle->params().begin()));
  CHECK(line_count(second / "align_metrics.csv") == 1);
}

TEST_CASE("align logs one metrics row per iteration") {
  const auto cfg = write_config("align3.ini", net_config(3));
  const auto out = work_dir() / "align3";
  REQUIRE(run("align --config " + cfg + " --out " + out.string()) == 0);
  CHECK(line_count(out / "align_metrics.csv") == 4);
  const auto ck = load_checkpoint((out / "align.ckpt").string());
  CHECK(ck.modulator);
  CHECK(ck.tags.count("pre_mse") == 1);
  CHECK(ck.tags.count("post_mse") == 1);
}

TEST_CASE("distill records its settings") {
  const auto cfg = write_config("distill.ini", net_config());
  const auto out = work_dir() / "distill";
  REQUIRE(run("distill --config " + cfg + " --out " + out.string() + " --k 2") == 0);
  CHECK(line_count(out / "distill_metrics.csv") == 5);
  const auto ck = load_checkpoint((out / "distill.ckpt").string());
  CHECK(ck.tags.at("k") == 2.0);
  CHECK(ck.tags.at("w") == doctest::Approx(0.1));
  // one grid offset of (1 - t_min) / 8 keeps the start SNR below 1e-3
  CHECK(ck.tags.at("delta") == doctest::Approx(0.999 / 8));
  CHECK(ck.tags.count("mse_distilled") == 1);
}

TEST_CASE("cost at full resolution is zero") {
  const auto cfg = write_config("cost.ini", "[cost]\nn = 8\n");
  const auto out = work_dir() / "cost";
  REQUIRE(run("cost --config " + cfg + " --out " + out.string() + " --k 4,40") == 0);
  CHECK(fs::exists(out / "cost_k4.csv"));
  CHECK(line_count(out / "cost_k40.csv") == 41);
  std::ifstream in(out / "cost_summary.csv");
  std::string header, row4, row40;
  std::getline(in, header);
  std::getline(in, row4);
  std::getline(in, row40);
  CHECK(header == "k,total_cost,first_step_dominant");
  const auto c1 = row40.find(','), c2 = row40.find(',', c1 + 1);
  CHECK(std::stod(row40.substr(c1 + 1, c2 - c1 - 1)) < 1e-6);
}
