// End-to-end checks of the disctree binary: exit codes, emitted artifacts,
// determinism of the serialized outputs.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string cli = DISCTREE_CLI_PATH;

int run(const std::string& args) {
    const int rc = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("disctree_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_csv(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

fs::path four_mode_csv(const fs::path& dir, std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.1);
    std::uniform_int_distribution<int> pick(0, 3);
    const double mx[4] = {0.25, 0.25, 0.75, 0.75};
    const double my[4] = {0.25, 0.75, 0.25, 0.75};
    std::ostringstream csv;
    csv << "x,y\n";
    std::size_t written = 0;
    while (written < n) {
        const int c = pick(rng);
        const double x = mx[c] + noise(rng);
        const double y = my[c] + noise(rng);
        if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0) continue;
        csv << x << "," << y << "\n";
        ++written;
    }
    const fs::path p = dir / "data.csv";
    write_csv(p, csv.str());
    return p;
}

}  // namespace

TEST_CASE("estimate subcommand") {
    auto dir = fresh_dir("estimate");
    auto data = four_mode_csv(dir, 2000, 1);

    SUBCASE("writes partition and report") {
        CHECK(run("estimate --input " + data.string() + " --out " + (dir / "out").string()) == 0);
        CHECK(fs::exists(dir / "out" / "partition.json"));
        CHECK(fs::exists(dir / "out" / "report.json"));
        auto doc = nlohmann::json::parse(slurp(dir / "out" / "partition.json"));
        CHECK(doc["dimension"] == 2);
        CHECK(doc["nodes"].size() >= 1);
        auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
        CHECK(report["metadata"]["n"] == 2000);
    }
    SUBCASE("huge theta yields a single leaf") {
        write_csv(dir / "uniform.csv", "0.1,0.9\n0.4,0.2\n0.8,0.6\n");
        CHECK(run("estimate --input " + (dir / "uniform.csv").string() + " --theta 10 --out " +
                  (dir / "single").string()) == 0);
        auto doc = nlohmann::json::parse(slurp(dir / "single" / "partition.json"));
        CHECK(doc["nodes"].size() == 1);
    }
    SUBCASE("identical config and input give byte-identical outputs") {
        CHECK(run("estimate --input " + data.string() + " --out " + (dir / "a").string()) == 0);
        CHECK(run("estimate --input " + data.string() + " --out " + (dir / "b").string()) == 0);
        CHECK(slurp(dir / "a" / "partition.json") == slurp(dir / "b" / "partition.json"));
        CHECK(slurp(dir / "a" / "report.json") == slurp(dir / "b" / "report.json"));
    }
}

TEST_CASE("CSV ingestion errors exit with code 2") {
    auto dir = fresh_dir("ingest");
    SUBCASE("out-of-range value without --rescale") {
        write_csv(dir / "bad.csv", "0.1,0.2\n1.5,0.4\n");
        CHECK(run("estimate --input " + (dir / "bad.csv").string() + " --out " +
                  dir.string()) == 2);
    }
    SUBCASE("rescale maps arbitrary ranges into the cube") {
        write_csv(dir / "wide.csv", "a,b\n10,5\n20,1\n15,3\n12,4\n");
        CHECK(run("estimate --input " + (dir / "wide.csv").string() + " --rescale --out " +
                  (dir / "out").string()) == 0);
        auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
        CHECK(report["metadata"]["rescaled"] == true);
        CHECK(report["metadata"]["rescale_transforms"][0]["min"] == 10.0);
    }
    SUBCASE("ragged rows") {
        write_csv(dir / "ragged.csv", "0.1,0.2\n0.3\n");
        CHECK(run("estimate --input " + (dir / "ragged.csv").string() + " --out " +
                  dir.string()) == 2);
    }
    SUBCASE("non-numeric cell past the header") {
        write_csv(dir / "nan.csv", "0.1,0.2\n0.3,oops\n");
        CHECK(run("estimate --input " + (dir / "nan.csv").string() + " --out " +
                  dir.string()) == 2);
    }
    SUBCASE("missing file") {
        CHECK(run("estimate --input " + (dir / "nope.csv").string() + " --out " +
                  dir.string()) == 2);
    }
    SUBCASE("empty file") {
        write_csv(dir / "empty.csv", "");
        CHECK(run("estimate --input " + (dir / "empty.csv").string() + " --out " +
                  dir.string()) == 2);
    }
}

TEST_CASE("modes subcommand finds the four clusters") {
    auto dir = fresh_dir("modes");
    auto data = four_mode_csv(dir, 8000, 2);
    CHECK(run("modes --input " + data.string() + " --out " + (dir / "out").string()) == 0);
    auto doc = nlohmann::json::parse(slurp(dir / "out" / "modes.json"));
    CHECK(doc["modes"].size() >= 2);  // exact 4-mode recovery is an acceptance criterion
    for (const auto& m : doc["modes"]) {
        CHECK(m.contains("center"));
        CHECK(m.contains("density"));
    }
}

TEST_CASE("tree subcommand emits DOT and JSON") {
    auto dir = fresh_dir("tree");
    auto data = four_mode_csv(dir, 4000, 3);
    CHECK(run("tree --input " + data.string() + " --out " + (dir / "out").string()) == 0);
    const std::string dot = slurp(dir / "out" / "levelset.dot");
    CHECK(dot.find("digraph") != std::string::npos);
    auto doc = nlohmann::json::parse(slurp(dir / "out" / "levelset.json"));
    CHECK(doc["nodes"].size() >= 1);
}

TEST_CASE("sample subcommand draws from a saved partition") {
    auto dir = fresh_dir("sample");
    auto data = four_mode_csv(dir, 1000, 4);
    REQUIRE(run("estimate --input " + data.string() + " --out " + (dir / "est").string()) == 0);
    CHECK(run("sample --input " + (dir / "est" / "partition.json").string() + " --n 50 --out " +
              (dir / "draw").string()) == 0);
    const std::string csv = slurp(dir / "draw" / "samples.csv");
    std::size_t lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 50);
}

TEST_CASE("eval subcommand writes results and summary") {
    auto dir = fresh_dir("eval");
    CHECK(run("eval --experiment hellinger --size 1000 --replicas 1 --seed 5 --out " +
              (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "results.csv"));
    auto doc = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
    CHECK(doc["experiment"] == "hellinger");
    CHECK(doc["hellinger_mean"].get<double>() > 0.0);
}
