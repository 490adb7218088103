#include <doctest.h>

#include "born_calderon/errors.hpp"
#include "born_calderon/potential_spec.hpp"
#include "born_calderon/result_table.hpp"
#include "potentials3d.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace bc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string corpus = BORN_CALDERON_CORPUS;

fs::path scratch()
{
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("born_calderon_cli_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run(const std::string& args, const std::string& env = "")
{
    const std::string cmd = env + (env.empty() ? "" : " ") + std::string(BORN_CALDERON_CLI) + " " + args +
                            " >" + (scratch() / "stdout.txt").string() + " 2>" + (scratch() / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string out(const std::string& name) { return (scratch() / name).string(); }

double column(const ParsedTable& t, std::size_t row, const std::string& name)
{
    const int c = t.find(name);
    REQUIRE(c >= 0);
    return t.rows[row][static_cast<std::size_t>(c)];
}

double indicator_hat(double alpha, double s)
{
    if (s == 0.0) return 4 * pi * alpha * alpha * alpha / 3;
    return 4 * pi * (std::sin(alpha * s) - alpha * s * std::cos(alpha * s)) / (s * s * s);
}

PotentialSpec parse(const std::string& text) { return parse_potential_spec(json::parse(text)); }

} // namespace

TEST_CASE("FNV-1a reference values")
{
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
    CHECK(hex64(0xaf63dc4c8601ec8cull) == "af63dc4c8601ec8c");
}

TEST_CASE("result tables round-trip at 17 digits")
{
    ResultTable t({{"k", ColumnType::integer}, {"x", ColumnType::real}, {"z", ColumnType::complex}});
    CHECK(t.header() == "k:int,x:real,z_re:real,z_im:real");
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> xs = {0.0, -0.0, 1.0 / 3.0, 1e-310, 5e-324, std::numeric_limits<double>::max(), 0.1};
    for (int i = 0; i < 200; ++i) xs.push_back(u(rng) * std::pow(10.0, 40.0 * u(rng)));
    for (std::size_t i = 0; i < xs.size(); ++i)
        t.add_row({static_cast<long long>(i), xs[i], cplx(xs[(i + 1) % xs.size()], -xs[i])});
    const ParsedTable p = parse_csv(t.to_csv());
    REQUIRE(p.rows.size() == xs.size());
    CHECK(p.names == std::vector<std::string>{"k", "x", "z_re", "z_im"});
    CHECK(p.types == std::vector<std::string>{"int", "real", "real", "real"});
    for (std::size_t i = 0; i < xs.size(); ++i) {
        CHECK(p.rows[i][0] == double(i));
        CHECK(p.rows[i][1] == xs[i]);
        CHECK(p.rows[i][2] == xs[(i + 1) % xs.size()]);
        CHECK(p.rows[i][3] == -xs[i]);
    }

    ResultTable special({{"x", ColumnType::real}});
    special.add_row({std::nan("")});
    special.add_row({HUGE_VAL});
    special.add_row({-HUGE_VAL});
    const ParsedTable q = parse_csv(special.to_csv());
    CHECK(std::isnan(q.rows[0][0]));
    CHECK(q.rows[1][0] == HUGE_VAL);
    CHECK(q.rows[2][0] == -HUGE_VAL);

    CHECK_THROWS_AS(t.add_row({1.0, 1.0, cplx(0.0)}), DomainError);
    CHECK_THROWS_AS(t.add_row({1LL, 1.0}), DomainError);
    CHECK_THROWS_AS(parse_csv("a:real\n1,2\n"), SchemaError);
    CHECK_THROWS_AS(parse_csv("a\n1\n"), SchemaError);
    CHECK_THROWS_AS(parse_csv("a:real\nx\n"), SchemaError);

    t.meta()["command"] = "test";
    const json side = t.sidecar();
    CHECK(side["rows"] == xs.size());
    CHECK(side["columns"][2]["type"] == "complex");
    CHECK(side["command"] == "test");
    CHECK(side.contains("git_revision"));
}

TEST_CASE("potential specs: shipped corpus")
{
    int count = 0;
    for (const auto& entry : fs::directory_iterator(corpus)) {
        if (entry.path().extension() != ".json") continue;
        INFO(entry.path().string());
        CHECK_NOTHROW(load_potential_spec(entry.path().string()));
        ++count;
    }
    CHECK(count >= 8);

    const PotentialSpec step = load_potential_spec(corpus + "/step_5_07.json");
    REQUIRE(step.is_radial());
    CHECK((*step.radial)(0.3) == 5.0);
    CHECK((*step.radial)(0.71) == 0.0);
    CHECK(step.radial->alpha() == 0.7);

    const PotentialSpec two = load_potential_spec(corpus + "/two_steps.json");
    CHECK((*two.radial)(0.2) == -1.5);
    CHECK((*two.radial)(0.5) == 2.5);

    const PotentialSpec y11 = load_potential_spec(corpus + "/indicator_re_y11.json");
    REQUIRE(y11.sph.has_value());
    const PotentialSH ref = indicator_re_y11(0.8);
    for (const Vec3& x : {Vec3(0.1, 0.2, 0.3), Vec3(-0.5, 0.1, 0.2), Vec3(0.0, 0.0, 0.7), Vec3(0.6, 0.5, 0.0)}) {
        CHECK(std::abs((*y11.sph)(x) - ref(x)) < 1e-14);
    }
    CHECK(y11.sph->reality_defect() < 1e-15);

    const PotentialSH lifted = step.as_sph();
    CHECK(std::abs(lifted(Vec3(0.1, -0.2, 0.3)) - 5.0) < 1e-14);
    CHECK(load_potential_spec(corpus + "/step_2d.json").dimension == 2);
    CHECK_THROWS_AS((void)load_potential_spec(corpus + "/step_2d.json").as_sph(), DomainError);
}

TEST_CASE("potential specs: schema violations")
{
    const std::string ok = R"({"type":"radial","alpha":0.5,"profile":{"kind":"constant_ball","c":1}})";
    CHECK_NOTHROW(parse(ok));
    CHECK(parse(ok).hash() == parse(ok).hash());
    CHECK(parse(ok).hash() != parse(R"({"type":"radial","alpha":0.5,"profile":{"kind":"constant_ball","c":2}})").hash());
    // key order does not change the canonical text
    CHECK(parse(ok).hash() == parse(R"({"profile":{"c":1,"kind":"constant_ball"},"alpha":0.5,"type":"radial"})").hash());

    for (const char* bad : {
             R"([1, 2])",
             R"({"alpha":0.5,"profile":{"kind":"constant_ball","c":1}})",
             R"({"type":"cubic","alpha":0.5,"profile":{"kind":"constant_ball","c":1}})",
             R"({"type":"radial","alpha":1.5,"profile":{"kind":"constant_ball","c":1}})",
             R"({"type":"radial","alpha":0,"profile":{"kind":"constant_ball","c":1}})",
             R"({"type":"radial","alpha":"x","profile":{"kind":"constant_ball","c":1}})",
             R"({"type":"radial","alpha":0.5,"profile":{"kind":"spiral","c":1}})",
             R"({"type":"radial","alpha":0.5,"profile":{"kind":"constant_ball"}})",
             R"({"type":"radial","alpha":0.5,"profile":{"kind":"constant_ball","c":1,"d":2}})",
             R"({"type":"radial","alpha":0.5,"extra":1,"profile":{"kind":"constant_ball","c":1}})",
             R"({"type":"radial","dimension":1,"alpha":0.5,"profile":{"kind":"constant_ball","c":1}})",
             R"({"type":"radial","alpha":0.5,"profile":{"kind":"piecewise_constant","breaks":[0,0.3,0.6],"values":[1,2]}})",
             R"({"type":"radial","alpha":0.5,"profile":{"kind":"piecewise_constant","breaks":[0,0.5],"values":[1,2]}})",
             R"({"type":"radial","alpha":0.5,"profile":{"kind":"annulus","c":1,"r_inner":0.7}})",
             R"({"type":"radial","alpha":0.5,"profile":{"kind":"gaussian_trunc","amplitude":1,"width":0}})",
             R"({"type":"sph3d","alpha":0.5,"coeffs":[]})",
             R"({"type":"sph3d","dimension":2,"alpha":0.5,"coeffs":[{"l":0,"m":0,"profile":{"kind":"constant_ball","c":1}}]})",
             R"({"type":"sph3d","alpha":0.5,"coeffs":[{"l":1,"m":2,"profile":{"kind":"constant_ball","c":1}}]})",
             R"({"type":"sph3d","alpha":0.5,"coeffs":[{"l":1,"m":1,"profile":{"kind":"constant_ball","c":1}}]})",
             R"({"type":"sph3d","alpha":0.5,"coeffs":[{"l":0,"m":0,"value":[1,1],"profile":{"kind":"constant_ball","c":1}}]})",
             R"({"type":"sph3d","alpha":0.5,"coeffs":[{"l":0,"m":0,"profile":{"kind":"bump","amplitude":1}},
                                                       {"l":0,"m":0,"profile":{"kind":"bump","amplitude":1}}]})",
             R"({"type":"sph3d","alpha":0.5,"coeffs":[{"l":1,"m":1,"value":[1,0],"profile":{"kind":"bump","amplitude":1}},
                                                       {"l":1,"m":-1,"value":[1,0],"profile":{"kind":"bump","amplitude":1}}]})",
             R"({"type":"sph3d","alpha":0.5,"profile":{"kind":"bump","amplitude":1},"coeffs":[]})",
         }) {
        INFO(bad);
        CHECK_THROWS_AS(parse(bad), SchemaError);
    }
    CHECK_NOTHROW(parse(R"({"type":"sph3d","alpha":0.5,"coeffs":[
        {"l":1,"m":1,"value":[1,2],"profile":{"kind":"bump","amplitude":1}},
        {"l":1,"m":-1,"value":[-1,2],"profile":{"kind":"bump","amplitude":1}}]})"));
    CHECK_THROWS_AS(load_potential_spec(out("missing.json")), SchemaError);
    std::ofstream(out("broken.json")) << "{\"type\": ";
    CHECK_THROWS_AS(load_potential_spec(out("broken.json")), SchemaError);
}

TEST_CASE("cli: radial eigenvalues")
{
    REQUIRE(run("eigs-radial --potential " + corpus + "/zero.json --kmax 6 --out " + out("zero.csv")) == 0);
    const ParsedTable z = read_csv(out("zero.csv"));
    REQUIRE(z.rows.size() == 7);
    for (std::size_t i = 0; i < z.rows.size(); ++i) CHECK(std::abs(column(z, i, "lambda_k") - double(i)) < 1e-12);

    REQUIRE(run("eigs-radial --potential " + corpus + "/constant_ball_c4.json --kmax 8 --out " + out("c4.csv")) == 0);
    const ParsedTable c4 = read_csv(out("c4.csv"));
    CHECK(std::abs(column(c4, 0, "lambda_k") - (2.0 / std::tanh(2.0) - 1.0)) < 1e-10);
    for (std::size_t i = 0; i < c4.rows.size(); ++i)
        CHECK(column(c4, i, "residual_bound") >= column(c4, i, "residual"));

    REQUIRE(run("eigs-radial --potential " + corpus + "/step_5_07.json --kmin 2 --kmax 8 --method both --out " +
                out("both.csv")) == 0);
    const ParsedTable both = read_csv(out("both.csv"));
    for (std::size_t i = 0; i < both.rows.size(); ++i)
        CHECK(column(both, i, "method_diff") <= column(both, i, "series_tail") + 1e-8);

    const json meta = json::parse(slurp(out("both.csv") + ".meta.json"));
    CHECK(meta["command"] == "eigs-radial");
    CHECK(meta["parameters"]["method"] == "both");
    CHECK(meta["potential_hash"] == hex64(load_potential_spec(corpus + "/step_5_07.json").hash()));
    CHECK(meta.contains("git_revision"));
    CHECK(meta.contains("tolerances"));
}

TEST_CASE("cli: averaged Born transform reduces to the radial series")
{
    const std::string grid = " --smax 10 --ns 21 --kmax 30";
    REQUIRE(run("born-radial --potential " + corpus + "/two_steps.json" + grid + " --out " + out("br.csv")) == 0);
    REQUIRE(run("born-averaged --potential " + corpus + "/two_steps.json --omega 1,-2,0.5" + grid + " --out " +
                out("ba.csv")) == 0);
    const ParsedTable r = read_csv(out("br.csv"));
    const ParsedTable a = read_csv(out("ba.csv"));
    REQUIRE(r.rows.size() == a.rows.size());
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        CHECK(column(r, i, "s") == column(a, i, "s"));
        CHECK(std::abs(column(r, i, "born_hat") - column(a, i, "averaged_re")) < 1e-7);
        CHECK(std::abs(column(a, i, "averaged_im")) < 1e-7);
    }
}

TEST_CASE("cli: Fourier oracle on the indicator")
{
    REQUIRE(run("fourier-oracle --potential " + corpus + "/indicator_08.json --omega 0.3,0.4,1 --smax 20 --ns 9 --out " +
                out("fo.csv")) == 0);
    const ParsedTable t = read_csv(out("fo.csv"));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double s = column(t, i, "s");
        CHECK(std::abs(column(t, i, "value_re") - indicator_hat(0.8, s)) < 1e-8);
        CHECK(std::abs(column(t, i, "value_im")) < 1e-10);
        CHECK(column(t, i, "converged") == 1.0);
    }
}

TEST_CASE("cli: reconstruction from a transform table")
{
    REQUIRE(run("born-radial --potential " + corpus + "/bump.json --smax 30 --ns 301 --kmax 60 --out " +
                out("bump.csv")) == 0);
    REQUIRE(run("reconstruct --input " + out("bump.csv") +
                " --column fourier --band-limit 30 --grid 1,41 --out " + out("rec.csv")) == 0);
    const ParsedTable t = read_csv(out("rec.csv"));
    const PotentialSpec spec = load_potential_spec(corpus + "/bump.json");
    double err = 0.0;
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        err = std::max(err, std::abs(column(t, i, "q") - (*spec.radial)(column(t, i, "r"))));
    CHECK(err < 0.1);
    CHECK(run("reconstruct --input " + out("bump.csv") + " --column nope --band-limit 30 --out " + out("x.csv")) == 3);
    CHECK(run("reconstruct --input " + out("bump.csv") + " --band-limit 40 --out " + out("x.csv")) == 3);
}

TEST_CASE("cli: exit codes and error reports")
{
    std::ofstream(out("bad.json")) << R"({"type":"radial","alpha":2,"profile":{"kind":"constant_ball","c":1}})";
    CHECK(run("eigs-radial --potential " + out("bad.json") + " --out " + out("x.csv")) == 3);
    const json err = json::parse(slurp(scratch() / "stderr.txt"));
    CHECK(err["error"] == "SchemaError");
    CHECK(err["exit_code"] == 3);

    CHECK(run("eigs-radial --out " + out("x.csv")) == 3);
    CHECK(run("eigs-radial --potential " + corpus + "/zero.json --method magic --out " + out("x.csv")) == 3);
    CHECK(run("matrix-elements --potential " + corpus + "/zero.json --omega 0,0,0 --out " + out("x.csv")) == 3);
    CHECK(run("born-averaged --potential " + corpus + "/step_2d.json --out " + out("x.csv")) == 3);

    // below the series threshold
    CHECK(run("eigs-radial --potential " + corpus + "/step_5_07.json --kmax 4 --method series --out " +
              out("x.csv")) == 2);
    const std::string report = slurp(scratch() / "stderr.txt");
    CHECK(json::parse(report.substr(report.rfind('{')))["error"] == "ConvergenceError");

    // an unattainable route tolerance is a tolerance violation
    CHECK(run("matrix-elements --potential " + corpus + "/indicator_re_y11.json --kmax 1 --route-tolerance 0 --out " +
              out("x.csv")) == 4);
}

TEST_CASE("cli: output is identical across thread counts")
{
    const std::string args = "matrix-elements --potential " + corpus + "/bump_y21.json --omega 0.2,0.5,1 --kmax 3 --out ";
    REQUIRE(run(args + out("t1.csv"), "BORN_CALDERON_THREADS=1") == 0);
    REQUIRE(run(args + out("t3.csv"), "BORN_CALDERON_THREADS=3") == 0);
    REQUIRE(run(args + out("t3b.csv"), "BORN_CALDERON_THREADS=3") == 0);
    CHECK(slurp(out("t1.csv")) == slurp(out("t3.csv")));
    CHECK(slurp(out("t3.csv")) == slurp(out("t3b.csv")));
    CHECK(slurp(out("t1.csv") + ".meta.json") == slurp(out("t3.csv") + ".meta.json"));
}

TEST_CASE("cli: fast self-test")
{
    CHECK(run("selftest --suite fast") == 0);
    const std::string text = slurp(scratch() / "stdout.txt");
    CHECK(text.find("FAIL") == std::string::npos);
    CHECK(text.find("selftest passed") != std::string::npos);
    CHECK(run("selftest --suite nope") == 3);
}
