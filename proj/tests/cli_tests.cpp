// End-to-end tests of the command-line tool.  The binary under test is the
// last command-line argument (ctest passes $<TARGET_FILE:hsdisp>); every
// scenario shells out and inspects exit code plus combined output.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsdisp/dispersion.hpp"
#include "hsdisp/material.hpp"
#include "hsdisp/minimizer.hpp"
#include "hsdisp/packing.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_hsdisp;

struct RunResult {
    int code = -1;
    std::string out;
};

// Combined stdout+stderr; `env_prefix` goes in front of the binary so tests
// can exercise HSDISP_* variables.
RunResult run(const std::string& args, const std::string& env_prefix = "") {
    std::string cmd = env_prefix.empty() ? "" : env_prefix + " ";
    cmd += g_hsdisp + " " + args + " 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    int st = pclose(p);
    RunResult r;
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    r.out = out;
    return r;
}

std::string slurp(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

struct TmpDir {
    fs::path dir;
    TmpDir() {
        dir = fs::temp_directory_path() /
              ("hsdisp-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
        fs::create_directories(dir);
    }
    ~TmpDir() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    std::string file(const std::string& name) const { return (dir / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

bool has_tmp_leftover(const fs::path& dir) {
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().string().find(".tmp") != std::string::npos) return true;
    return false;
}

}  // namespace

TEST_CASE("homogenize matches the closed form and honors flag precedence") {
    auto r = run("homogenize --alpha 1 --beta 2 --theta 0.5 --dim 2");
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["m"].get<double>() == doctest::Approx(10.0 / 7.0).epsilon(1e-12));
    CHECK(j["bounds"]["assemblage"].get<double>() == j["m"].get<double>());
    CHECK(j["bounds"]["harmonic"].get<double>() <= j["m"].get<double>());
    CHECK(j["m"].get<double>() <= j["bounds"]["arithmetic"].get<double>());

    auto csv = run("homogenize --alpha 1 --beta 2 --theta 0.5 --dim 3 --emit csv");
    REQUIRE(csv.code == 0);
    CHECK(csv.out.rfind("m,b1t,b2t,ct,bounds_harmonic", 0) == 0);
    CHECK(csv.out.find("1.4545454545454546") != std::string::npos);

    auto env = run("homogenize --alpha 1 --beta 2 --dim 2", "HSDISP_THETA=0.5");
    REQUIRE(env.code == 0);
    CHECK(json::parse(env.out)["m"].get<double>() == j["m"].get<double>());

    auto flag_wins = run("homogenize --alpha 1 --beta 2 --theta 0.5 --dim 2", "HSDISP_THETA=0.9");
    REQUIRE(flag_wins.code == 0);
    CHECK(json::parse(flag_wins.out)["m"].get<double>() == j["m"].get<double>());

    CHECK(run("homogenize --alpha 1 --beta 2 --theta 1.0 --dim 2").code == 2);
    auto missing = run("homogenize --alpha 1 --beta 2 --dim 2");
    CHECK(missing.code == 2);
    CHECK(missing.out.find("--theta") != std::string::npos);
    CHECK(run("homogenize --alpha 1 --beta 2 --theta 0.5 --dim 2 --emit yaml").code == 2);
    CHECK(run("homogenize --alpha 1 --beta 2 --theta 0.5 --dim 2 --threads 0").code == 2);
    CHECK(run("homogenize --nope").code == 2);
    CHECK(run("").code == 2);
    CHECK(run("--help").code == 0);
    auto help = run("pack --help");
    CHECK(help.code == 0);
    CHECK(help.out.find("HSDISP_GRID") != std::string::npos);
}

TEST_CASE("config file fills unset flags and rejects unknown keys") {
    TmpDir tmp;
    {
        std::ofstream f(tmp.file("cfg.json"));
        f << R"({"alpha": 1, "beta": 2, "theta": 0.5, "dim": 2})";
    }
    auto r = run("homogenize --config " + tmp.file("cfg.json"));
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["m"].get<double>() == doctest::Approx(10.0 / 7.0).epsilon(1e-12));

    auto flag_wins = run("homogenize --config " + tmp.file("cfg.json") + " --dim 3");
    REQUIRE(flag_wins.code == 0);
    CHECK(json::parse(flag_wins.out)["m"].get<double>() ==
          doctest::Approx(16.0 / 11.0).epsilon(1e-12));

    auto env_wins = run("homogenize --config " + tmp.file("cfg.json"), "HSDISP_DIM=3");
    REQUIRE(env_wins.code == 0);
    CHECK(json::parse(env_wins.out)["m"].get<double>() ==
          doctest::Approx(16.0 / 11.0).epsilon(1e-12));

    {
        std::ofstream f(tmp.file("bad.json"));
        f << R"({"alpha": 1, "beta": 2, "theta": 0.5, "dim": 2, "bogus": 1})";
    }
    auto bad = run("homogenize --config " + tmp.file("bad.json"));
    CHECK(bad.code == 2);
    CHECK(bad.out.find("unknown key 'bogus'") != std::string::npos);

    {
        std::ofstream f(tmp.file("emit.json"));
        f << R"({"alpha": 1, "beta": 2, "theta": 0.5, "dim": 2, "emit": "csv"})";
    }
    auto csv = run("homogenize --config " + tmp.file("emit.json"));
    REQUIRE(csv.code == 0);
    CHECK(csv.out.rfind("m,b1t", 0) == 0);

    {
        std::ofstream f(tmp.file("frac.json"));
        f << R"({"dim": 2.5})";
    }
    auto frac = run("homogenize --alpha 1 --beta 2 --theta 0.5 --config " + tmp.file("frac.json"));
    CHECK(frac.code == 2);
    CHECK(frac.out.find("must be an integer") != std::string::npos);

    {
        std::ofstream f(tmp.file("broken.json"));
        f << "{ not json";
    }
    CHECK(run("homogenize --config " + tmp.file("broken.json")).code == 2);
    CHECK(run("homogenize --config " + tmp.file("absent.json")).code == 2);
}

TEST_CASE("pack is deterministic, atomic, and matches the torus references") {
    TmpDir tmp;
    auto a = run("pack --dim 2 --max-balls 6 --out " + tmp.file("a.json"));
    REQUIRE(a.code == 0);
    CHECK(a.out.empty());
    REQUIRE(run("pack --dim 2 --max-balls 6 --out " + tmp.file("b.json")).code == 0);
    CHECK(slurp(tmp.file("a.json")) == slurp(tmp.file("b.json")));
    CHECK_FALSE(has_tmp_leftover(tmp.dir));

    auto direct = run("pack --dim 2 --max-balls 6");
    REQUIRE(direct.code == 0);
    CHECK(direct.out == slurp(tmp.file("a.json")));

    auto j = json::parse(direct.out);
    REQUIRE(j["balls"].size() == 6);
    CHECK(j["dim"].get<int>() == 2);
    CHECK(j["balls"][0]["radius"].get<double>() == 0.5);
    CHECK(j["balls"][1]["radius"].get<double>() ==
          doctest::Approx((std::sqrt(2.0) - 1.0) / 2.0).epsilon(1e-12));
    for (int i = 2; i < 6; ++i)
        CHECK(j["balls"][std::size_t(i)]["radius"].get<double>() ==
              doctest::Approx((5.0 - 3.0 * std::sqrt(2.0)) / 14.0).epsilon(1e-9));

    auto pk = hsdisp::packing::load_packing(tmp.file("a.json"));
    CHECK(pk.balls.size() == 6);

    auto csv = run("pack --dim 2 --max-balls 6 --emit csv");
    REQUIRE(csv.code == 0);
    CHECK(csv.out.rfind("center_0,center_1,radius\n", 0) == 0);
    CHECK(std::count(csv.out.begin(), csv.out.end(), '\n') == 7);

    CHECK(run("pack --dim 2").code == 2);
    CHECK(run("pack --max-balls 6").code == 2);
}

TEST_CASE("dispersion composes with pack output and rejects bad structures") {
    TmpDir tmp;
    REQUIRE(run("pack --dim 2 --max-balls 6 --out " + tmp.file("p.json")).code == 0);

    auto r = run("dispersion --alpha 1 --beta 2 --theta 0.5 --dim 2 --packing-file " +
                 tmp.file("p.json"));
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["balls"].get<int>() == 6);
    CHECK(j["d_phs"].get<double>() < 0.0);

    // Same computation straight through the library.
    auto p = hsdisp::material::make_profile(1.0, 2.0, 0.5, 2);
    auto den =
        hsdisp::dispersion::ball_dispersion_density(hsdisp::material::first_corrector(p), p);
    std::vector<double> radii;
    for (const auto& b : hsdisp::packing::load_packing(tmp.file("p.json")).balls)
        radii.push_back(b.radius);
    auto expected = hsdisp::dispersion::dispersion_phs(den, radii, 2);
    CHECK(j["d_phs"].get<double>() ==
          doctest::Approx(expected.d_phs).epsilon(1e-12));
    CHECK(j["j_value"].get<double>() == doctest::Approx(expected.density.j_value).epsilon(1e-12));

    auto apo = run("dispersion --alpha 1 --beta 2 --theta 0.5 --dim 2 --apollonian 6");
    REQUIRE(apo.code == 0);
    CHECK(apo.out == r.out);

    auto flat = run("dispersion --alpha 1.7 --beta 1.7 --theta 0.4 --dim 2 --packing-file " +
                    tmp.file("p.json"));
    REQUIRE(flat.code == 0);
    CHECK(json::parse(flat.out)["d_phs"].get<double>() == 0.0);

    {
        std::ofstream f(tmp.file("overlap.json"));
        f << R"({"dim": 2, "generator": "file", "balls": [)"
          << R"({"center": [0.2, 0.2], "radius": 0.15},)"
          << R"({"center": [0.4, 0.2], "radius": 0.1}]})";
    }
    auto bad = run("dispersion --alpha 1 --beta 2 --theta 0.5 --dim 2 --packing-file " +
                   tmp.file("overlap.json"));
    CHECK(bad.code == 2);
    CHECK(bad.out.find("overlap") != std::string::npos);
    CHECK(bad.out.find("0 and 1") != std::string::npos);

    CHECK(run("dispersion --alpha 1 --beta 2 --theta 0.5 --dim 2 --packing-file " +
              tmp.file("p.json") + " --apollonian 6")
              .code == 2);
    CHECK(run("dispersion --alpha 1 --beta 2 --theta 0.5 --dim 2").code == 2);
    CHECK(run("dispersion --alpha 1 --beta 2 --theta 0.5 --dim 3 --packing-file " +
              tmp.file("p.json"))
              .code == 2);
}

TEST_CASE("minimize brackets the functional and can persist the packing") {
    auto r = run("minimize --dim 1 --budget 1");
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["i_upper"].get<double>() == -0.125);
    CHECK(j["i_lower"].get<double>() == doctest::Approx(-0.125).epsilon(1e-12));
    CHECK(j["i_lower"].get<double>() <= j["i_upper"].get<double>());
    CHECK(j["radii_file"].get<std::string>().empty());

    TmpDir tmp;
    auto r2 = run("minimize --dim 2 --budget 6 --radii-out " + tmp.file("m.json"));
    REQUIRE(r2.code == 0);
    auto j2 = json::parse(r2.out);
    CHECK(j2["radii_file"].get<std::string>() == tmp.file("m.json"));
    CHECK(j2["i_upper"].get<double>() ==
          doctest::Approx(-0.064374085725114494).epsilon(1e-14));
    CHECK(j2["i_lower"].get<double>() <= j2["i_upper"].get<double>());
    CHECK(hsdisp::packing::load_packing(tmp.file("m.json")).balls.size() == 6);

    CHECK(run("minimize --dim 2").code == 2);
}

TEST_CASE("validate reruns byte-identically and reports through csv") {
    TmpDir tmp;
    auto r1 = run("validate --suite all --seed 7 --out " + tmp.file("r1.json"));
    REQUIRE(r1.code == 0);
    auto r2 = run("validate --seed 7 --out " + tmp.file("r2.json"));
    REQUIRE(r2.code == 0);
    CHECK(slurp(tmp.file("r1.json")) == slurp(tmp.file("r2.json")));
    CHECK_FALSE(has_tmp_leftover(tmp.dir));

    auto j = json::parse(slurp(tmp.file("r1.json")));
    CHECK(j["summary"]["all_pass"].get<bool>());
    CHECK(j["summary"]["failed"].get<int>() == 0);
    CHECK(j["seed"].get<std::uint64_t>() == 7);

    auto csv = run("validate --seed 7 --emit csv");
    REQUIRE(csv.code == 0);
    CHECK(csv.out.rfind("kind,name,value,reference,error,tolerance,pass,note\n", 0) == 0);
    std::size_t checks = 0, pos = 0;
    while ((pos = csv.out.find("\ncheck,", pos)) != std::string::npos) ++checks, ++pos;
    CHECK(checks == j["summary"]["checks"].get<std::size_t>());
    CHECK(csv.out.find("\nobservation,") != std::string::npos);
    CHECK(csv.out.find(",false,") == std::string::npos);

    CHECK(run("validate --suite fast").code == 2);
}

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: cli_tests [doctest options] <hsdisp binary>\n");
        return 1;
    }
    g_hsdisp = argv[argc - 1];
    doctest::Context ctx(argc - 1, argv);
    return ctx.run();
}
