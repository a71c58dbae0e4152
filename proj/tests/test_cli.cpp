#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "gp/kernels.hpp"
#include "gp/workload.hpp"

using nlohmann::json;

namespace {

const std::string kBin = GRAPHBENCH_PATH;

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Runs the CLI with the given arguments, capturing exit code and streams.
RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const std::string tag = "/tmp/gp_cli_" + std::to_string(++counter);
    const std::string cmd = kBin + " " + args + " >" + tag + ".out 2>" + tag + ".err";
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(tag + ".out");
    r.err = slurp(tag + ".err");
    std::remove((tag + ".out").c_str());
    std::remove((tag + ".err").c_str());
    return r;
}

}  // namespace

TEST_CASE("sorter output is byte-identical across reruns and carries a header") {
    auto a = run_cli("sorter");
    auto b = run_cli("sorter");
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.rfind("n,k,passes,cycles,ratio_vs_k2\n", 0) == 0);
    CHECK(a.out.find("1048576,32,4,4194304,5.000000") != std::string::npos);
}

TEST_CASE("scaling output is byte-identical across reruns") {
    const std::string args = "scaling --n 256 --nnz 1200 --nodes 1 --nodes 4 --seed 7";
    auto a = run_cli(args);
    auto b = run_cli(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.rfind("nodes,", 0) == 0);
}

TEST_CASE("unknown flags and bad values exit with code 2") {
    CHECK(run_cli("sorter --no-such-flag").code == 2);
    CHECK(run_cli("nosuchcommand").code == 2);
    CHECK(run_cli("sorter --k 3").code == 2);
    CHECK(run_cli("kernel --op spgemm --semiring bogus").code == 2);
    CHECK(run_cli("gen --n 4 --nnz 99 --out /tmp/gp_cli_gen_bad.mtx").code == 2);
}

TEST_CASE("mismatched operand shapes exit 3 with a DimensionMismatch code") {
    REQUIRE(run_cli("gen --n 48 --nnz 200 --seed 1 --out /tmp/gp_cli_a.mtx").code == 0);
    REQUIRE(run_cli("gen --n 32 --nnz 150 --seed 2 --out /tmp/gp_cli_b.mtx").code == 0);
    auto r = run_cli("kernel --op spgemm --a /tmp/gp_cli_a.mtx --b /tmp/gp_cli_b.mtx");
    CHECK(r.code == 3);
    CHECK(r.err.find("DimensionMismatch") != std::string::npos);
    std::remove("/tmp/gp_cli_a.mtx");
    std::remove("/tmp/gp_cli_b.mtx");
}

TEST_CASE("fig6 at injection rate zero accepts nothing and stays stable") {
    auto r = run_cli("fig6 --dims 4x4 --rates 0 --warmup 50 --measure 100 --format json");
    REQUIRE(r.code == 0);
    const json doc = json::parse(r.out);
    REQUIRE(doc.at("rows").size() == 2);
    for (const auto& row : doc.at("rows")) {
        CHECK(row.at("accepted_rate").get<double>() == 0.0);
        CHECK(row.at("stable").get<bool>());
    }
}

TEST_CASE("kernel JSON report matches an independently computed oracle") {
    REQUIRE(run_cli("gen --n 64 --nnz 400 --seed 5 --out /tmp/gp_cli_ka.mtx").code == 0);
    REQUIRE(run_cli("gen --n 64 --nnz 400 --seed 6 --out /tmp/gp_cli_kb.mtx").code == 0);
    auto r = run_cli(
        "kernel --op spgemm --a /tmp/gp_cli_ka.mtx --b /tmp/gp_cli_kb.mtx --nodes 4 --seed 3");
    REQUIRE(r.code == 0);
    const json doc = json::parse(r.out);
    CHECK(doc.at("report_version").get<int>() == 1);

    const auto a = gp::read_mm<std::int64_t>("/tmp/gp_cli_ka.mtx");
    const auto b = gp::read_mm<std::int64_t>("/tmp/gp_cli_kb.mtx");
    // one partial product per (A element, matching B row element) pair
    auto bstats = gp::degree_stats(b);
    std::int64_t partials = 0;
    for (const auto& t : a.triples())
        partials += bstats.row_degree[static_cast<std::size_t>(t.col)];
    CHECK(doc.at("partial_products").get<std::int64_t>() == partials);

    const auto c = gp::spgemm_ref(a, b, gp::plus_times<std::int64_t>());
    CHECK(doc.at("result").at("nnz").get<std::int64_t>() == c.nnz());
    CHECK(doc.at("net").at("packets") == doc.at("net").at("delivered"));
    std::remove("/tmp/gp_cli_ka.mtx");
    std::remove("/tmp/gp_cli_kb.mtx");
}

TEST_CASE("aligned element-wise add ships zero packets") {
    REQUIRE(run_cli("gen --n 64 --nnz 400 --seed 5 --out /tmp/gp_cli_ea.mtx").code == 0);
    auto r = run_cli("kernel --op ewise-add --a /tmp/gp_cli_ea.mtx --b /tmp/gp_cli_ea.mtx --nodes 4");
    REQUIRE(r.code == 0);
    const json doc = json::parse(r.out);
    CHECK(doc.at("net").at("packets").get<std::int64_t>() == 0);
    std::remove("/tmp/gp_cli_ea.mtx");
}

TEST_CASE("config file fills defaults but explicit flags win") {
    {
        std::ofstream cfg("/tmp/gp_cli_cfg.json");
        cfg << R"({"n": 100, "nnz": 321, "seed": 9})";
    }
    REQUIRE(run_cli("gen --config /tmp/gp_cli_cfg.json --out /tmp/gp_cli_c1.mtx").code == 0);
    auto m1 = gp::read_mm<std::int64_t>("/tmp/gp_cli_c1.mtx");
    CHECK(m1.nrows() == 100);
    CHECK(m1.nnz() == 321);

    REQUIRE(run_cli("gen --config /tmp/gp_cli_cfg.json --n 50 --nnz 120 --out /tmp/gp_cli_c2.mtx")
                .code == 0);
    auto m2 = gp::read_mm<std::int64_t>("/tmp/gp_cli_c2.mtx");
    CHECK(m2.nrows() == 50);
    CHECK(m2.nnz() == 120);
    std::remove("/tmp/gp_cli_cfg.json");
    std::remove("/tmp/gp_cli_c1.mtx");
    std::remove("/tmp/gp_cli_c2.mtx");
}

TEST_CASE("a malformed config file is a configuration error") {
    {
        std::ofstream cfg("/tmp/gp_cli_badcfg.json");
        cfg << "{not json";
    }
    CHECK(run_cli("sorter --config /tmp/gp_cli_badcfg.json").code == 2);
    CHECK(run_cli("sorter --config /tmp/gp_cli_missing.json").code == 2);
    std::remove("/tmp/gp_cli_badcfg.json");
}
