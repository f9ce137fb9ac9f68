#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace {

struct CliResult {
    int exit_code;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    std::string cmd = std::string(JETFIELD_BIN) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::string out;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    int status = pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string model(const std::string& name) {
    return std::string("--model ") + MODELS_DIR + "/" + name;
}

}  // namespace

TEST_CASE("probe exit codes reflect the verdict") {
    CliResult pass = run_cli("probe --body cube --order 3");
    CHECK(pass.exit_code == 0);
    CHECK(pass.out.find("passes: pass") != std::string::npos);

    CliResult fail = run_cli("probe --body abs --format json");
    CHECK(fail.exit_code == 1);
    auto j = nlohmann::json::parse(fail.out);
    CHECK(j["schema"] == 1);
    CHECK(j["command"] == "probe");
    CHECK(j["verdicts"]["passes"] == false);
    CHECK(j["output"].contains("failed_order"));
}

TEST_CASE("usage and parse errors exit with 2") {
    CHECK(run_cli("probe").exit_code == 2);             // missing --body
    CHECK(run_cli("frobnicate").exit_code == 2);        // unknown command
    CHECK(run_cli("prolong " + model("wsq.jf")).exit_code == 2);  // missing --system
    CHECK(run_cli("prolong --model /nonexistent.jf --system s").exit_code == 2);

    std::string bad = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
                      "/jetfield_bad_model.jf";
    std::ofstream(bad) << "chart B { x0 +++ }\n";
    CHECK(run_cli("prolong --model " + bad + " --system s").exit_code == 2);
    std::remove(bad.c_str());
}

TEST_CASE("prolong emits the dotted block") {
    CliResult r = run_cli("prolong " + model("wsq.jf") + " --system eps --format json");
    CHECK(r.exit_code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["verdicts"]["decomposition"] == true);
    CHECK(j["output"].contains("d_z0"));
}

TEST_CASE("contact distinguishes pointed curves") {
    std::string base = "contact " + model("wsq.jf") + " --system eps ";
    CHECK(run_cli(base + "--curve c1@1 --curve c2@1").exit_code == 0);
    CHECK(run_cli(base + "--curve c1@1 --curve c2@-1").exit_code == 1);
    CHECK(run_cli(base + "--curve c1@1").exit_code == 2);
}

TEST_CASE("verify-universal in generic mode") {
    CliResult r = run_cli("verify-universal --generic --format json");
    CHECK(r.exit_code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["verdicts"]["connection_identity"] == true);
    CHECK(j["verdicts"]["curvature_identity"] == true);
    CHECK(!j["residuals"].empty());
    for (auto& res : j["residuals"]) CHECK(res["expr"] == "0");

    CHECK(run_cli("verify-universal --dims 2 1 2").exit_code == 0);
    CHECK(run_cli("verify-universal --dims 2 1").exit_code == 2);
}

TEST_CASE("verify-universal on a model file") {
    CliResult r = run_cli("verify-universal " + model("linear_connections.jf") +
                          " --connsystem lc --gamma g");
    CHECK(r.exit_code == 0);
}

TEST_CASE("--out writes the report to a file") {
    std::string path = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
                       "/jetfield_out.json";
    CliResult r = run_cli("liouville --dim 2 --format json --out " + path);
    CHECK(r.exit_code == 0);
    CHECK(r.out.empty());
    std::ifstream in(path);
    REQUIRE(in.good());
    nlohmann::json j;
    in >> j;
    CHECK(j["verdicts"]["omega_matches_curvature"] == true);
    std::remove(path.c_str());
}

TEST_CASE("json reports are byte-stable for a fixed seed") {
    std::string cmd = "contact " + model("wsq.jf") +
                      " --system eps --curve c1@1 --curve c2@1 --format json --seed 0";
    CliResult a = run_cli(cmd);
    CliResult b = run_cli(cmd);
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);
}
