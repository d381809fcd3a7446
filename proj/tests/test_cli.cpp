#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "helpers.hpp"
#include "vlut/image_io.hpp"

namespace fs = std::filesystem;

namespace {

int vlut_exit(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + VLUT_BINARY + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Relative path -> bytes for every regular file under dir.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return out;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

const char* kSmall = " --width 48 --height 36";

}  // namespace

TEST_CASE("usage errors exit 2") {
  const auto dir = vlut::test::scratch_dir("cli_usage");
  const auto log = dir / "log.txt";
  CHECK(vlut_exit("", log) == 2);
  CHECK(vlut_exit("frobnicate", log) == 2);
  CHECK(vlut_exit("simulate --recipe inair_whiteboard --seed 1", log) == 2);
  CHECK(slurp(log).find("--out") != std::string::npos);
  CHECK(vlut_exit("calibrate --manifest x.json --out o --pyramid 4x3", log) != 0);
  CHECK(vlut_exit("--help", log) == 0);
  CHECK(vlut_exit("--config " + q(dir / "missing.json") + " simulate", log) == 2);
}

TEST_CASE("runtime failures exit 1") {
  const auto dir = vlut::test::scratch_dir("cli_runtime");
  const auto log = dir / "log.txt";
  CHECK(vlut_exit("simulate --recipe no_such --seed 1 --out " + q(dir / "x"), log) == 1);
  CHECK(vlut_exit("calibrate --manifest " + q(dir / "missing.json") + " --out " + q(dir / "c"), log) == 1);

  // A dataset whose annotations were stripped has nothing to calibrate from.
  REQUIRE(vlut_exit("simulate --recipe inair_whiteboard --seed 2 --out " + q(dir / "ds") + kSmall, log) == 0);
  nlohmann::json m = nlohmann::json::parse(slurp(dir / "ds" / "manifest.json"));
  for (auto& f : m["frames"]) f.erase("annotations");
  std::ofstream(dir / "ds" / "bare.json") << m.dump();
  CHECK(vlut_exit("calibrate --in-air --manifest " + q(dir / "ds" / "bare.json") + " --out " + q(dir / "c"), log) ==
        1);
}

TEST_CASE("same seed gives identical bytes") {
  const auto dir = vlut::test::scratch_dir("cli_seed");
  const auto log = dir / "log.txt";
  for (const char* name : {"a", "b"})
    REQUIRE(vlut_exit(std::string("simulate --recipe clear_two_boards --seed 11 --out ") + q(dir / name) + kSmall,
                      log) == 0);
  const auto a = tree(dir / "a"), b = tree(dir / "b");
  CHECK(a.size() > 30);
  CHECK(a == b);

  REQUIRE(vlut_exit("simulate --recipe clear_two_boards --seed 12 --out " + q(dir / "c") + kSmall, log) == 0);
  CHECK(tree(dir / "c") != a);
}

TEST_CASE("config supplies defaults and flags override") {
  const auto dir = vlut::test::scratch_dir("cli_config");
  const auto log = dir / "log.txt";
  std::ofstream(dir / "cfg.json") << R"({"recipe": "inair_whiteboard", "seed": 4, "width": 40, "height": 30})";
  REQUIRE(vlut_exit("--config " + q(dir / "cfg.json") + " simulate --out " + q(dir / "a"), log) == 0);
  nlohmann::json m = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(m["camera"]["width"] == 40);

  REQUIRE(vlut_exit("--config " + q(dir / "cfg.json") + " simulate --width 56 --out " + q(dir / "b"), log) == 0);
  m = nlohmann::json::parse(slurp(dir / "b" / "manifest.json"));
  CHECK(m["camera"]["width"] == 56);
  CHECK(m["camera"]["height"] == 30);

  std::ofstream(dir / "bad.json") << R"({"width": "wide"})";
  CHECK(vlut_exit("--config " + q(dir / "bad.json") + " simulate --recipe inair_whiteboard --seed 1 --out " +
                      q(dir / "c"),
                  log) == 2);
}

TEST_CASE("full pipeline") {
  const auto dir = vlut::test::scratch_dir("cli_pipeline");
  const auto log = dir / "log.txt";
  REQUIRE(vlut_exit("simulate --recipe inair_whiteboard --seed 3 --out " + q(dir / "ds") + " --width 64 --height 48",
                    log) == 0);
  const std::string manifest = q(dir / "ds" / "manifest.json");
  REQUIRE(vlut_exit("calibrate --in-air --manifest " + manifest + " --out " + q(dir / "cal"), log) == 0);
  CHECK(fs::exists(dir / "cal" / "lut.vlut"));
  CHECK(fs::exists(dir / "cal" / "report.json"));
  REQUIRE(vlut_exit("restore --manifest " + manifest + " --lut " + q(dir / "cal" / "lut.vlut") + " --out " +
                        q(dir / "res"),
                    log) == 0);
  CHECK(fs::exists(dir / "res" / "summary.json"));
  REQUIRE(vlut_exit("eval --manifest " + manifest + " --restored " + q(dir / "res") + " --out " + q(dir / "ev") +
                        " --lut " + q(dir / "cal" / "lut.vlut"),
                    log) == 0);
  const nlohmann::json ev = nlohmann::json::parse(slurp(dir / "ev" / "eval.json"));
  CHECK(ev["patches"].size() > 0);
  CHECK(fs::exists(dir / "ev" / "patches.csv"));
}
