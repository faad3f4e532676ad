#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(CARNOT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

const std::filesystem::path kDir = std::filesystem::temp_directory_path() / "carnot_test_cli";

std::string write_config(const std::string& name, const std::string& text) {
  std::filesystem::create_directories(kDir);
  const auto p = kDir / name;
  std::ofstream(p) << text;
  return p.string();
}

}  // namespace

TEST_CASE("exit codes") {
  const std::string out = (kDir / "out").string();
  CHECK(run("describe-group --out " + out) == 0);
  CHECK(run("frobnicate") == 2);
  CHECK(run("") == 2);
  CHECK(run("describe-group --no-such-flag") == 2);
  CHECK(run("--help") == 0);
  // Runtime errors: missing seed, missing file, invalid combination.
  CHECK(run("sample --out " + out) == 1);
  CHECK(run("describe-group --config /nonexistent/file.toml") == 1);
  const std::string bad = write_config("bad.toml", "[norm]\nfamily = \"kaplan_gh\"\n");
  CHECK(run("describe-group --config " + bad) == 1);
}

TEST_CASE("reports land in the output directory") {
  const std::string cfg = write_config("untamed.toml", "seed = 3\n[outer]\np = 2\n[scan]\nsamples = 256\n");
  const auto out = kDir / "scan";
  REQUIRE(run("scan-v2 --config " + cfg + " --out " + out.string() + " --threads 1") == 0);
  CHECK(std::filesystem::exists(out / "scan-v2.json"));
  CHECK(std::filesystem::exists(out / "scan-v2.csv"));
  const std::string json = slurp(out / "scan-v2.json");
  CHECK(json.find("\"schema_version\": 1") != std::string::npos);
  CHECK(json.find("\"verdict\": \"not diverging\"") != std::string::npos);
}

TEST_CASE("seed flag overrides the file") {
  const std::string cfg = write_config("seeded.toml", "seed = 3\n[outer]\np = 2\n[scan]\nsamples = 256\n");
  const auto a = kDir / "seed_a";
  const auto b = kDir / "seed_b";
  REQUIRE(run("scan-v2 --config " + cfg + " --out " + a.string() + " --seed 99") == 0);
  REQUIRE(run("scan-v2 --config " + cfg + " --out " + b.string()) == 0);
  CHECK(slurp(a / "scan-v2.json").find("\"seed\": 99") != std::string::npos);
  CHECK(slurp(a / "scan-v2.csv") != slurp(b / "scan-v2.csv"));
}
