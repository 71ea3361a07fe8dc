#include "qpspec/arithmetic.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string err;
};

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("qpspec_cli_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path path = dir / "run.ini";
    std::ofstream(path) << text;
    return path;
}

Run run_cli(const std::string& args, const fs::path& dir) {
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string(QPSPEC_CLI) + " " + args + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(err);
    std::getline(in, r.err);
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<std::string>> csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (!line.empty() && line.back() == ',') {
            cells.emplace_back();
        }
        rows.push_back(cells);
    }
    return rows;
}

const char* kMaryland = R"([model]
kind = maryland
lambda = 1

[alpha]
kind = golden
terms = 30

[run]
theta = 1/4
epsilon = 0.2
seed = 7

[energies]
kind = uniform
min = -4
max = 4
count = 64

[lyapunov]
n = 10000
)";

const char* kAmoLn4 = R"([model]
kind = amo
lambda = 2

[alpha]
kind = liouville
target = 1.3862943611198906
spikes = 3

[run]
theta = 1/8
epsilon = 0.3

[energies]
kind = list
values = 0

[lyapunov]
n = 20000

[gordon]
rate = 0.01
)";

}  // namespace

TEST_CASE("indices: golden beta and the Maryland delta table") {
    const fs::path dir = scratch("indices");
    const fs::path cfg = write_config(dir, kMaryland);
    const Run r = run_cli("indices --config " + cfg.string() + " --out " + (dir / "out").string(), dir);
    REQUIRE(r.code == 0);
    const auto rows = csv(dir / "out" / "indices.csv");
    REQUIRE(rows.size() == 31);
    CHECK(rows[0] == std::vector<std::string>{"level", "q", "beta", "delta"});
    CHECK(std::stod(rows.back()[2]) < 1e-3);

    const qpspec::ContinuedFraction cf = qpspec::cf_from_coeffs(qpspec::golden_coefficients(30));
    const qpspec::Pole half{qpspec::TorusPoint(mpq_class(1, 2)), 1};
    const qpspec::IndexValue d =
        qpspec::delta_index(cf, qpspec::TorusPoint(mpq_class(1, 4)), std::span<const qpspec::Pole>(&half, 1));
    for (std::size_t n = 0; n < 30; ++n) {
        const double qn = cf.q(n).get_d();
        const double x = qn * (0.25 - 0.5);
        const double eq8 = (std::log(std::abs(x - std::round(x))) + std::log(cf.q(n + 1).get_d())) / qn;
        const double got = std::stod(rows[n + 1][3]);
        if (std::isinf(eq8)) {
            CHECK(std::isinf(got));
        } else {
            CHECK(got == doctest::Approx(eq8).epsilon(1e-10));
            CHECK(got == d.per_level[n]);
        }
    }
    const json j = json::parse(slurp(dir / "out" / "indices.json"));
    CHECK(j.contains("beta"));
    CHECK(j.contains("gamma"));
    CHECK(j.contains("delta"));
}

TEST_CASE("config errors exit 2 and name the key") {
    const fs::path dir = scratch("config");
    const fs::path unknown = write_config(dir, "[model]\nkind = amo\nlambda = 2\nbogus = 1\n[alpha]\nkind = golden\n");
    Run r = run_cli("indices --config " + unknown.string() + " --out " + (dir / "out").string(), dir);
    CHECK(r.code == 2);
    CHECK(r.err.rfind("qpspec: error[config]: ", 0) == 0);
    CHECK(r.err.find("model.bogus") != std::string::npos);

    const fs::path bad = write_config(dir, "[model]\nkind = amo\nlambda = -x\n[alpha]\nkind = golden\n");
    r = run_cli("indices --config " + bad.string() + " --out " + (dir / "out").string(), dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("model.lambda") != std::string::npos);

    const fs::path malformed = write_config(dir, "[model]\nkind amo\n");
    CHECK(run_cli("indices --config " + malformed.string(), dir).code == 2);

    const fs::path decimal = write_config(dir, "[model]\nkind = amo\nlambda = 2\n[alpha]\nkind = decimal\nvalue = 0.618\n");
    r = run_cli("cf --config " + decimal.string() + " --out " + (dir / "out").string(), dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("alpha.precision") != std::string::npos);

    CHECK(run_cli("indices", dir).code == 2);
    CHECK(run_cli("frobnicate --config x", dir).code == 2);
}

TEST_CASE("io errors exit 3") {
    const fs::path dir = scratch("io");
    const fs::path cfg = write_config(dir, kMaryland);
    std::ofstream(dir / "afile") << "x";
    Run r = run_cli("lyapunov --config " + cfg.string() + " --out " + (dir / "afile").string(), dir);
    CHECK(r.code == 3);
    CHECK(r.err.rfind("qpspec: error[io]: ", 0) == 0);
    r = run_cli("indices --config " + (dir / "missing.ini").string(), dir);
    CHECK(r.code == 3);
}

TEST_CASE("lyapunov: 64-point Maryland scan and the constant closed form") {
    const fs::path dir = scratch("lyapunov");
    const fs::path cfg = write_config(dir, kMaryland);
    REQUIRE(run_cli("lyapunov --config " + cfg.string() + " --out " + (dir / "out").string(), dir).code == 0);
    const auto rows = csv(dir / "out" / "lyapunov.csv");
    REQUIRE(rows.size() == 65);
    CHECK(rows[0][0] == "E");
    CHECK(rows[0][1] == "L");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].size() == rows[0].size());
        CHECK(std::stod(rows[i][1]) >= 0.0);
    }

    const fs::path flat = write_config(dir, "[model]\nkind = constant\nvalue = 0\n[alpha]\nkind = golden\nterms = 40\n"
                                            "[energies]\nkind = list\nvalues = -3, 0, 3\n[lyapunov]\nn = 10000\n");
    REQUIRE(run_cli("lyapunov --config " + flat.string() + " --out " + (dir / "flat").string(), dir).code == 0);
    const auto f = csv(dir / "flat" / "lyapunov.csv");
    REQUIRE(f.size() == 4);
    const double rho = std::log((3.0 + std::sqrt(5.0)) / 2.0);
    CHECK(std::abs(std::stod(f[1][1]) - rho) < 1e-3);
    CHECK(std::abs(std::stod(f[2][1])) < 1e-2);
    CHECK(std::abs(std::stod(f[3][1]) - rho) < 1e-3);
}

TEST_CASE("gordon: rational alpha, AMO near ln 4, depth overflow") {
    const fs::path dir = scratch("gordon");
    const fs::path rat = write_config(dir, "[model]\nkind = amo\nlambda = 1.3\n[alpha]\nkind = coefficients\n"
                                           "coefficients = 2, 3, 1, 4\n[run]\ntheta = 2/7\n[energies]\nkind = list\n"
                                           "values = 0.4, 1.1\n[lyapunov]\nn = 1000\n[gordon]\nlevels = 4\n");
    REQUIRE(run_cli("gordon --config " + rat.string() + " --out " + (dir / "rat").string(), dir).code == 0);
    json j = json::parse(slurp(dir / "rat" / "gordon.json"));
    REQUIRE(j["results"].size() == 2);
    for (const json& res : j["results"]) {
        for (const json& c : res["certificates"]) {
            CHECK(c["q"] == "43");
            CHECK(c["lhs_inverse"].get<double>() == 0.0);
            CHECK(c["log_lhs_inverse"] == "-inf");
        }
    }

    const fs::path amo = write_config(dir, kAmoLn4);
    REQUIRE(run_cli("gordon --config " + amo.string() + " --out " + (dir / "amo").string(), dir).code == 0);
    j = json::parse(slurp(dir / "amo" / "gordon.json"));
    const json& certs = j["results"][0]["certificates"];
    REQUIRE(certs.size() == 3);
    CHECK(certs[1]["q"] == "4");
    CHECK(certs[1]["verdict"] == "excluded");
    CHECK(certs[2]["q"] == "257");
    CHECK(certs[2]["verdict"] == "excluded");
    CHECK(j["results"][0]["verdict"] == "excluded");
    for (const json& c : certs) {
        CHECK(c["lemma"]["holds"] == true);
    }

    const fs::path deep = write_config(dir, "[model]\nkind = amo\nlambda = 2\n[alpha]\nkind = golden\nterms = 10\n"
                                            "[energies]\nkind = list\nvalues = 0\n[gordon]\nlevels = 12\n");
    const Run r = run_cli("gordon --config " + deep.string() + " --out " + (dir / "deep").string(), dir);
    CHECK(r.code == 4);
    CHECK(r.err.rfind("qpspec: error[range]: ", 0) == 0);
}

TEST_CASE("classify: golden, ln 4 and an empty grid") {
    const fs::path dir = scratch("classify");
    const std::string spectrum = "[energies]\nkind = spectrum\nN = 256\ncount = 8\n[lyapunov]\nn = 10000\n";
    const fs::path golden = write_config(dir, "[model]\nkind = amo\nlambda = 2\n[alpha]\nkind = golden\nterms = 30\n"
                                              "[run]\ntheta = 0\n" + spectrum);
    REQUIRE(run_cli("classify --config " + golden.string() + " --out " + (dir / "golden").string(), dir).code == 0);
    auto rows = csv(dir / "golden" / "classify.csv");
    REQUIRE(rows.size() == 9);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i][4] != "sc-candidate");
    }

    const fs::path ln4 = write_config(dir, "[model]\nkind = amo\nlambda = 2\n[alpha]\nkind = liouville\n"
                                           "target = 1.3862943611198906\nlead = 7\nspikes = 1\n[run]\ntheta = 1/8\n" +
                                               spectrum);
    REQUIRE(run_cli("classify --config " + ln4.string() + " --out " + (dir / "ln4").string(), dir).code == 0);
    rows = csv(dir / "ln4" / "classify.csv");
    REQUIRE(rows.size() == 9);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i][4] == "sc-candidate");
    }
    const json summary = json::parse(slurp(dir / "ln4" / "classify.json"));
    CHECK(summary["uncertain_fraction"].get<double>() == 0.0);

    const fs::path empty = write_config(dir, "[model]\nkind = amo\nlambda = 2\n[alpha]\nkind = golden\nterms = 30\n"
                                             "[energies]\nkind = list\nvalues =\n");
    REQUIRE(run_cli("classify --config " + empty.string() + " --out " + (dir / "empty").string(), dir).code == 0);
    CHECK(csv(dir / "empty" / "classify.csv").size() == 1);
}

TEST_CASE("cf: coefficients and convergents") {
    const fs::path dir = scratch("cf");
    const fs::path cfg = write_config(dir, "[model]\nkind = amo\nlambda = 2\n[alpha]\nkind = decimal\n"
                                           "value = 0.14159265358979323846\nprecision = 64\n");
    REQUIRE(run_cli("cf --config " + cfg.string() + " --out " + (dir / "out").string(), dir).code == 0);
    const auto rows = csv(dir / "out" / "convergents.csv");
    REQUIRE(rows.size() >= 4);
    CHECK(rows[0] == std::vector<std::string>{"n", "a", "p", "q"});
    CHECK(rows[2][1] == "7");
    CHECK(rows[3][1] == "15");
    CHECK(rows[3][3] == "106");
}

TEST_CASE("determinism across runs and thread counts") {
    const fs::path dir = scratch("determinism");
    const fs::path cfg = write_config(dir, std::string(kMaryland) + "[gordon]\nlevels = 6, 8\n");
    for (const std::string& cmd : {"indices", "lyapunov", "classify", "gordon"}) {
        for (const std::string& threads : {"1", "8"}) {
            for (int rep = 0; rep < 2; ++rep) {
                const fs::path out = dir / ("t" + threads + "_" + std::to_string(rep));
                REQUIRE(run_cli(cmd + " --config " + cfg.string() + " --out " + out.string() + " --threads " + threads,
                               dir)
                            .code == 0);
            }
        }
    }
    for (const auto& entry : fs::directory_iterator(dir / "t1_0")) {
        const std::string base = slurp(entry.path());
        for (const std::string& other : {"t1_1", "t8_0", "t8_1"}) {
            CHECK_MESSAGE(slurp(dir / other / entry.path().filename()) == base, entry.path().filename());
        }
    }
}
