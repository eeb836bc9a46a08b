#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include <unistd.h>

#include "cli.hpp"
#include "cryomap/payload.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cryomap");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cryomap::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Workdir {
  fs::path dir = fs::temp_directory_path() / ("cryomap_cli_" + std::to_string(::getpid()));
  Workdir() { fs::create_directories(dir); }
  ~Workdir() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("simulate, build, query, slice, headroom, diff") {
    Workdir w;
    REQUIRE(cli({"simulate", "--campaign", "coarse", "--out", w / "data"}).code == 0);
    CHECK(fs::exists(w / "data/dataset.csv"));
    auto v = cli({"validate", "--data", w / "data"});
    CHECK(v.code == 0);
    CHECK(v.out.find("invalid") != std::string::npos);
    REQUIRE(cli({"build", "--data", w / "data", "--out", w / "map.json"}).code == 0);

    auto q = cli({"query", w / "map.json", "--q-stl-mW", "10", "--out", w / "q.json"});
    CHECK(q.code == 0);
    auto j = nlohmann::json::parse(slurp(w / "q.json"));
    CHECK(j["containment"] == "NODE_EXACT");

    CHECK(cli({"query", w / "map.json", "--q-stl-mW", "500"}).code == 3);
    CHECK(cli({"query", w / "map.json", "--bogus"}).code == 1);
    CHECK(cli({"build", "--data", w / "missing", "--out", w / "x.json"}).code == 2);

    CHECK(cli({"slice", w / "map.json", "--x", "STL", "--y", "MXC", "--field", "t_mxc", "--out", w / "s.svg"}).code == 0);
    CHECK(slurp(w / "s.svg").rfind("<svg", 0) == 0);

    auto h = cli({"headroom", w / "map.json", "--stage", "STL", "--out", w / "h.txt", "--surface-x", "STL",
                  "--surface-y", "MXC", "--svg", w / "h.svg"});
    CHECK(h.code == 0);
    CHECK(slurp(w / "h.txt").find("binding") != std::string::npos);
    CHECK(fs::exists(w / "h.svg"));

    CHECK(cli({"diff", w / "map.json", w / "map.json", "--out", w / "d.csv"}).code == 0);
    CHECK(cli({"fit-linear", "--data", w / "data", "--fraction", "0.6", "--out", w / "fit.csv"}).code == 0);
  }

  TEST_CASE("payload equilibrium") {
    Workdir w;
    REQUIRE(cli({"simulate", "--campaign", "dense", "--out", w / "data"}).code == 0);
    REQUIRE(cli({"build", "--data", w / "data", "--out", w / "map.json"}).code == 0);
    std::string spec = (cryomap::default_data_dir() / "payloads" / "reference.payload").string();
    auto r = cli({"payload", "--spec", spec, "--temps-from", w / "map.json", "--equilibrium", "--out", w / "eq.json"});
    CHECK(r.code == 0);
    auto j = nlohmann::json::parse(slurp(w / "eq.json"));
    CHECK(j["converged"] == true);
    CHECK(cli({"payload", "--spec", spec, "--temps-from", w / "map.json", "--equilibrium", "--max-iter", "1",
               "--out", w / "eq1.json"})
              .code == 3);
  }
}
