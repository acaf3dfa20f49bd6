#include <catch2/catch_amalgamated.hpp>
#include <nlohmann/json.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vshock/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vshock;

namespace {

std::string cli_path() {
    const char* p = std::getenv("VSHOCK_CLI");
    REQUIRE(p != nullptr);
    return p;
}

int run(const std::string& args) {
    int status = std::system((cli_path() + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("vshock-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing enforces the schema strictly") {
    CHECK_THROWS_AS(parse_config(json{{"modle", "burgers"}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"profile", {{"tol", 1.0}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"evolve", {{"T", -5.0}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"u0", {{"shape", "comb"}}}}), ConfigError);

    RunConfig c = parse_config(json{{"model", "burgers"},
                                    {"evolve", {{"T", 50.0}, {"dx", 0.25}}},
                                    {"seed", 3u}});
    CHECK(c.model_name == "burgers");
    CHECK(c.evolve.T == 50.0);
    CHECK(c.seed == 3);
    CHECK(c.make_model().n == 1);
}

TEST_CASE("inline polynomial models round-trip through the config") {
    json inline_model = {
        {"model",
         {{"name", "my_scalar"},
          {"n", 1},
          {"flux", {json::array({{{"coef", 0.5}, {"powers", {2}}}})}},
          {"viscosity", {json::array({{{"coef", 1.0}, {"powers", {0}}}})}},
          {"u_minus", {1.0}},
          {"u_plus", {-1.0}}}}};
    RunConfig c = parse_config(inline_model);
    FluxModel m = c.make_model();
    CHECK(m.name == "my_scalar");
    Vec u = Vec::Constant(1, 2.0);
    CHECK(m.f(u)[0] == Catch::Approx(2.0));
}

TEST_CASE("profile subcommand writes its artifacts and succeeds") {
    TempDir dir;
    REQUIRE(run("profile --out " + dir.path.string()) == 0);
    CHECK(fs::exists(dir.path / "profile.csv"));
    json side = json::parse(slurp(dir.path / "profile.json"));
    CHECK(side["verdict"].get<bool>());
    CHECK(side["residual"].get<double>() <= 1e-8);
    CHECK(side["ell"].get<int>() == 1);
}

TEST_CASE("malformed config exits 2 without artifacts") {
    TempDir dir;
    fs::path cfg = dir.path / "bad.json";
    std::ofstream(cfg) << R"({"model": "burgers", "porfile": {}})";
    fs::path out = dir.path / "out";
    CHECK(run("profile --config " + cfg.string() + " --out " + out.string()) == 2);
    CHECK(!fs::exists(out / "profile.csv"));
    CHECK(!fs::exists(out / "profile.json"));
}

TEST_CASE("algebraic identity verification is selectable and deterministic") {
    TempDir dir;
    std::string base = "verify-lemmas --only interaction1,interaction2 --out ";
    REQUIRE(run(base + (dir.path / "a").string()) == 0);
    REQUIRE(run(base + (dir.path / "b").string()) == 0);
    std::string a = slurp(dir.path / "a" / "lemmas.json");
    CHECK(a == slurp(dir.path / "b" / "lemmas.json"));
    json j = json::parse(a);
    CHECK(j["interaction1"]["max_residual"].get<double>() <= 1e-10);
    CHECK(j["interaction2"]["max_residual"].get<double>() <= 1e-10);
    CHECK(!j.contains("hzlemma"));
}

TEST_CASE("report subcommand aggregates verdicts in the output directory") {
    TempDir dir;
    REQUIRE(run("profile --out " + dir.path.string()) == 0);
    REQUIRE(run("verify-lemmas --only interaction1 --out " + dir.path.string()) ==
            0);
    REQUIRE(run("report --out " + dir.path.string()) == 0);
    json rep = json::parse(slurp(dir.path / "report.json"));
    CHECK(rep["all_pass"].get<bool>());
    CHECK(rep.contains("profile"));
    CHECK(rep.contains("lemmas"));
}
