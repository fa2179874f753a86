#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args, const std::string& env = {}) {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" FOILSCOPE_CLI "' " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string query(const std::string& map, const std::string& foil) {
  const std::string dir = FOILSCOPE_MAPS_DIR;
  return "--map " + dir + "/" + map + ".map --plan " + dir + "/" + map + ".plan --foil " + dir +
         "/" + map + "." + foil + ".foil";
}

}  // namespace

TEST_CASE("explain succeeds and is deterministic") {
  auto a = run("explain " + query("sokoban_switch", "push") + " --seed 3");
  CHECK(a.code == 0);
  CHECK(a.out.find("switch_on") != std::string::npos);
  auto b = run("explain " + query("sokoban_switch", "push") + " --seed 3");
  CHECK(a.out == b.out);
}

TEST_CASE("strict mode exits 1 on an insufficient vocabulary") {
  const fs::path vocab = fs::temp_directory_path() / "foilscope-cli-vocab.txt";
  std::ofstream(vocab) << "box_on_target\n";
  auto lenient = run("explain " + query("sokoban_switch", "push") + " --vocab " + vocab.string());
  CHECK(lenient.code == 0);
  auto strict =
      run("explain " + query("sokoban_switch", "push") + " --vocab " + vocab.string() + " --strict");
  CHECK(strict.code == 1);
  fs::remove(vocab);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run("").code == 2);
  CHECK(run("explain --map /nonexistent.map --plan x --foil y").code == 2);
  CHECK(run("explain " + query("sokoban_switch", "push") + " --kappa 3").code == 2);
  CHECK(run("frobnicate").code == 2);
}

TEST_CASE("seed falls back to the environment") {
  auto flag = run("explain " + query("sokoban_cell", "push") + " --seed 21");
  auto env = run("explain " + query("sokoban_cell", "push"), "FOILSCOPE_SEED=21");
  CHECK(flag.code == 0);
  CHECK(env.code == 0);
  CHECK(flag.out == env.out);
}

TEST_CASE("curves CSV has a stable header and one row per budget step") {
  auto r = run("curves " + query("sokoban_switch", "push") + " --seeds 3 --budget 20");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("budget_step,mean_posterior,std\n", 0) == 0);
  std::size_t lines = 0;
  for (char c : r.out) lines += c == '\n';
  CHECK(lines == 22);
}

TEST_CASE("assumptions and validate") {
  const fs::path csv = fs::temp_directory_path() / "foilscope-cli-assumptions.csv";
  auto a = run("assumptions " + query("sokoban_switch", "push") + " --out " + csv.string());
  CHECK(a.code == 0);
  CHECK(a.out.find("worst_concept") != std::string::npos);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "action,concept,p_executable,p_all,gap");
  fs::remove(csv);
  auto v = run("validate " + query("key_quest_s1", "a") + " --radius 2");
  CHECK(v.code == 0);
}
