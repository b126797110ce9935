#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

const fs::path& workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "bvm_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void put(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

Result run(const std::string& args) {
  const fs::path out = workdir() / "stdout.txt", err = workdir() / "stderr.txt";
  const std::string cmd = std::string("'") + BVM_CLI_PATH + "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string drop_first_line(const std::string& s) { return s.substr(s.find('\n') + 1); }

}  // namespace

TEST_CASE("run writes one csv and json per experiment") {
  const fs::path cfg = workdir() / "chi.ini";
  const fs::path out = workdir() / "out_chi";
  put(cfg, "[run]\nseed = 3\n[experiment chi]\nkind = verify-bounds\nbound = chi-square\n"
           "k = 10\nx = 2\nR = 1000\n");
  const auto r = run("run --config '" + cfg.string() + "' --out '" + out.string() + "'");
  CHECK(r.code == 0);
  CHECK(fs::exists(out / "chi.csv"));
  CHECK(fs::exists(out / "chi.json"));
  const std::string first = slurp(out / "chi.csv");
  CHECK(first.rfind("# generated ", 0) == 0);
  CHECK(first.find("# verdict=pass") != std::string::npos);

  // Byte identical apart from the timestamp line, with threads varied.
  REQUIRE(run("run --config '" + cfg.string() + "' --out '" + out.string() + "' --threads 3")
              .code == 0);
  const std::string second = slurp(out / "chi.csv");
  CHECK(drop_first_line(first) == drop_first_line(second));
  CHECK(slurp(out / "chi.json").find("\"verdict\": \"pass\"") != std::string::npos);

  REQUIRE(run("run --config '" + cfg.string() + "' --out '" + out.string() + "' --seed 4").code ==
          0);
  CHECK(drop_first_line(first) != drop_first_line(slurp(out / "chi.csv")));
}

TEST_CASE("exit codes") {
  const fs::path guard = workdir() / "guard.ini";
  put(guard,
      "[source]\nfamily = exponential\neta = 0.69\n[schedule]\nkind = manual\nsteps = 10:3\n"
      "[experiment cov]\nkind = coverage\nn_grid = 1000\ndelta = 1\n");
  const auto g = run("run --config '" + guard.string() + "' --out '" +
                     (workdir() / "out_guard").string() + "'");
  CHECK(g.code == 3);
  CHECK(g.err.find("experiment.cov.delta") != std::string::npos);
  CHECK_FALSE(fs::exists(workdir() / "out_guard" / "cov.csv"));

  const fs::path bad = workdir() / "bad.ini";
  put(bad, "[experiment chi]\nkind = verify-bounds\nbound = chi-square\nx = 2\nwidth = 3\n");
  const auto b = run("run --config '" + bad.string() + "'");
  CHECK(b.code == 2);
  CHECK(b.err.find("experiment.chi.width") != std::string::npos);

  CHECK(run("run --config '" + (workdir() / "missing.ini").string() + "'").code == 2);
  CHECK(run("run").code == 2);
  CHECK(run("no-such-command").code == 2);
  CHECK(run("--help").code == 0);
  CHECK(run("verify-bounds --bound nope").code == 2);
  CHECK(run("verify-bounds --R 10").code == 3);
}

TEST_CASE("verify-bounds flags") {
  const auto r = run("verify-bounds --bound pearson-centered --k 5 --level 1 --n-theta-min 50 "
                     "--theta-small 0.01 --R 2000 --seed 2");
  CHECK(r.code == 0);
  CHECK(r.out.find("# experiment verify_bounds kind=verify-bounds") == 0);
  CHECK(r.out.find("# verdict=pass") != std::string::npos);
  const auto again = run("verify-bounds --bound pearson-centered --k 5 --level 1 --n-theta-min 50 "
                         "--theta-small 0.01 --R 2000 --seed 2 --threads 2");
  CHECK(again.out == r.out);
}

TEST_CASE("estimate") {
  const fs::path counts = workdir() / "counts.txt";
  put(counts, "5\n5\n");
  const auto r = run("estimate '" + counts.string() + "' --m 2000");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["k"] == 2);
  CHECK(j["n"] == 10);
  CHECK(std::abs(j["plug_in"].get<double>() + std::log(2.0)) < 1e-12);
  CHECK(std::abs(j["entropy"].get<double>() - std::log(2.0)) < 1e-12);
  CHECK(j["credible"]["lower"].get<double>() <= j["credible"]["upper"].get<double>());
  // Equal interior cells give a zero plug-in gamma.
  CHECK(j["warnings"].dump().find("degenerate") != std::string::npos);

  put(counts, "3\n0\n7\n");
  const auto skipped = run("estimate '" + counts.string() + "' --tail 2 --m 500");
  REQUIRE(skipped.code == 0);
  const auto jk = nlohmann::json::parse(skipped.out);
  CHECK(jk["k"] == 3);
  CHECK(jk["warnings"].dump().find("1 empty cells skipped") != std::string::npos);
  CHECK(jk["wald"]["lower"].get<double>() < jk["wald"]["upper"].get<double>());

  put(counts, "7\n");
  const auto single = run("estimate '" + counts.string() + "' --m 500");
  REQUIRE(single.code == 0);
  const auto js = nlohmann::json::parse(single.out);
  CHECK(js["plug_in"].get<double>() == 0.0);
  CHECK(js["warnings"].dump().find("degenerate") != std::string::npos);

  put(counts, "");
  CHECK(run("estimate '" + counts.string() + "'").code == 2);
  put(counts, "3\nx\n");
  const auto bad = run("estimate '" + counts.string() + "'");
  CHECK(bad.code == 2);
  CHECK(bad.err.find(":2:") != std::string::npos);
  put(counts, "3\n4\n");
  CHECK(run("estimate '" + counts.string() + "' --delta 1").code == 2);
}
