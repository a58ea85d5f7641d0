#include <doctest.h>
#include <json.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "shefk/cli.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = shefk::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "shefk_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

std::string run_binary(const std::string& args) {
    const std::string cmd = std::string(SHEFK_CLI_PATH) + " " + args;
    std::string text;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) text.append(buf.data(), n);
    pclose(pipe);
    return text;
}

const std::vector<std::string> kSmall{"--k", "5", "--paths", "300", "--dt", "0.01", "--format", "json"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
}

}  // namespace

TEST_CASE("FNV-1a reference values") {
    CHECK(shefk::cli::fnv1a_hex("") == "cbf29ce484222325");
    CHECK(shefk::cli::fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(shefk::cli::fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("solve writes config, results and provenance") {
    const auto r = run(with({"solve"}, kSmall));
    REQUIRE(r.code == 0);
    const auto doc = json::parse(r.out);
    CHECK(doc["config"]["k"] == 5);
    CHECK(doc["config"]["command"] == "solve");
    CHECK_FALSE(doc["config"].contains("threads"));
    CHECK_FALSE(doc["config"].contains("out"));
    CHECK(doc["results"].size() == 1);
    CHECK(doc["results"][0]["value"].get<double>() > 0.0);
    CHECK(doc["provenance"]["config_hash"].get<std::string>().size() == 16);
    CHECK(doc["provenance"]["seed"] == 1);
}

TEST_CASE("output is byte-identical across thread counts") {
    const auto a = run(with({"solve", "--threads", "1"}, kSmall));
    const auto b = run(with({"solve", "--threads", "3"}, kSmall));
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const std::string args = "converge-k --k-list 5,10 --paths 200 --dt 0.01 --format json";
    const auto p1 = run_binary(args + " --threads 1");
    const auto p4 = run_binary(args + " --threads 4");
    CHECK_FALSE(p1.empty());
    CHECK(p1 == p4);
}

TEST_CASE("converge-k CSV schema") {
    const auto r = run({"converge-k", "--k-list", "5,10,20", "--paths", "200", "--dt", "0.01"});
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "k,value,std_error,gap");
    std::getline(in, line);
    CHECK(line.rfind("5,", 0) == 0);
    CHECK(line.back() == ',');  // no gap for the first row
    int rows = 1;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(line.back() != ',');
    }
    CHECK(rows == 3);
    CHECK(run({"converge-k", "--k-list", "10,5"}).code == 2);
}

TEST_CASE("validate exit codes") {
    CHECK(run({"validate", "--quick"}).code == 0);
    const auto bad = run({"validate", "--quick", "--inject-fault", "wick-exponential-product"});
    CHECK(bad.code == 1);
    CHECK(bad.out.find("wick-exponential-product") != std::string::npos);
    CHECK(bad.out.find("false") != std::string::npos);
}

TEST_CASE("configuration errors exit 2") {
    const auto cfg = scratch("unknown.json");
    write_file(cfg, R"({"k": 4, "kay": 5})");
    const auto r = run({"solve", "--config", cfg.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("kay") != std::string::npos);

    const auto missing = run({"--k", "3"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("command") != std::string::npos);

    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"solve", "--k", "0"}).code == 2);
    CHECK(run({"solve", "--k", "three"}).code == 2);
    CHECK(run({"solve", "--u0", "nonsense"}).code == 2);
    CHECK(run({"solve", "--format", "xml"}).code == 2);
    CHECK(run({"solve", "--config", scratch("absent.json").string()}).code == 2);
    write_file(scratch("nested.json"), R"({"k": {"value": 3}})");
    CHECK(run({"solve", "--config", scratch("nested.json").string()}).code == 2);
}

TEST_CASE("precedence: defaults < replay < config < flags") {
    const auto replay = scratch("replay.json");
    const auto cfg = scratch("cfg.json");
    auto k_of = [](const Result& r) { return json::parse(r.out)["config"]["k"].get<int>(); };
    const std::vector<std::string> base{"--paths", "50", "--dt", "0.05", "--format", "json"};

    write_file(replay, run(with({"solve", "--k", "3"}, base)).out);
    write_file(cfg, R"({"k": 4})");

    CHECK(k_of(run(with({"solve"}, base))) == 50);
    CHECK(k_of(run(with({"--replay", replay.string()}, base))) == 3);
    CHECK(k_of(run(with({"solve", "--replay", replay.string(), "--config", cfg.string()}, base))) == 4);
    CHECK(k_of(run(with({"solve", "--config", cfg.string(), "--k", "6"}, base))) == 6);
    CHECK(k_of(run(with({"solve", "--replay", replay.string(), "--k", "7"}, base))) == 7);
    // the replayed command is used when none is given
    CHECK(json::parse(run(with({"--replay", replay.string()}, base)).out)["config"]["command"] == "solve");
}

TEST_CASE("replay reproduces the result") {
    const auto first = run(with({"solve-limit", "--seed", "9", "--draw", "2"}, kSmall));
    REQUIRE(first.code == 0);
    const auto saved = scratch("result.json");
    write_file(saved, first.out);
    const auto again = run({"--replay", saved.string(), "--format", "json"});
    REQUIRE(again.code == 0);
    CHECK(again.out == first.out);
}

TEST_CASE("--out writes the file instead of stdout") {
    const auto target = scratch("out.csv");
    fs::remove(target);
    const auto r = run({"solve", "--k", "3", "--paths", "50", "--dt", "0.05", "--out", target.string()});
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    CHECK(slurp(target).rfind("t,x,k,n_paths,value,std_error\n", 0) == 0);
}

TEST_CASE("subcommands run on tiny inputs") {
    const std::vector<std::string> tiny{"--paths", "200", "--dt", "0.02", "--samples", "20", "--k", "3"};
    for (const char* cmd : {"chaos", "moments", "localtime"}) {
        CAPTURE(cmd);
        CHECK(run(with({cmd}, tiny)).code == 0);
    }
    CHECK(run({"stransform", "--paths", "100", "--dt", "0.02", "--xi", "0.5", "--time-nodes", "3",
               "--space-nodes", "5"}).code == 0);
    CHECK(run({"pde-check", "--t", "0.1", "--k", "1", "--paths", "500", "--dt", "0.01", "--h-x", "0.5",
               "--h-z", "0.25"}).code != 2);
    CHECK(run({"chaos", "--t", "0"}).code == 2);
}
