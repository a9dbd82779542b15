#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const char* cli_path() { return VITSIM_CLI_PATH; }

int run(const std::string& args) {
    const std::string cmd = std::string("\"") + cli_path() + "\" " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path work_dir() {
    const auto d = fs::temp_directory_path() / "vitsim_cli_tests";
    fs::create_directories(d);
    return d;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("gen-weights then infer produces per-epoch results") {
    const auto dir = work_dir() / "run1";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto w = (dir / "w.bin").string();

    REQUIRE(run("gen-weights --seed 5 --out " + w) == 0);
    REQUIRE(fs::exists(w));

    REQUIRE(run("infer --weights " + w + " --synth 2 --seed 9 --out-dir " + dir.string()) == 0);
    const auto csv = read_file(dir / "synth.results.csv");
    CHECK(csv.rfind("epoch,stage,stage_label,stage_unfiltered,cycles,flags,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 epochs

    // identical invocations are byte-identical
    const auto dir2 = work_dir() / "run1b";
    fs::remove_all(dir2);
    REQUIRE(run("infer --weights " + w + " --synth 2 --seed 9 --out-dir " + dir2.string()) == 0);
    CHECK(read_file(dir2 / "synth.results.csv") == csv);

    // strict mode's exit code agrees with the flags column
    uint64_t flags = 0;
    {
        std::stringstream ss(csv);
        std::string line;
        std::getline(ss, line);  // header
        while (std::getline(ss, line)) {
            size_t pos = 0;
            for (int comma = 0; comma < 5; ++comma) pos = line.find(',', pos) + 1;
            flags += std::stoull(line.substr(pos));
        }
    }
    const int strict_rc =
        run("infer --weights " + w + " --synth 2 --seed 9 --strict --out-dir " + dir2.string());
    CHECK(strict_rc == (flags > 0 ? 4 : 0));
}

TEST_CASE("report writes the activity latency and power tables") {
    const auto dir = work_dir() / "run2";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto w = (dir / "w.bin").string();
    REQUIRE(run("gen-weights --seed 5 --out " + w) == 0);
    REQUIRE(run("report --weights " + w + " --synth 1 --json --out-dir " + dir.string()) == 0);
    for (const char* f :
         {"activity.csv", "latency.csv", "power.csv", "summary.txt", "report.json"})
        CHECK(fs::exists(dir / f));
    CHECK(read_file(dir / "activity.csv").rfind("unit,", 0) == 0);
}

TEST_CASE("bad invocations exit with the documented codes") {
    const auto dir = work_dir() / "run3";
    fs::create_directories(dir);
    // no input stream at all
    CHECK(run("infer --synth 0 --out-dir " + dir.string()) == 1);
    // unreadable weight file
    CHECK(run("infer --weights /nonexistent/w.bin --synth 1 --out-dir " + dir.string()) == 2);
    // unreadable epoch stream
    const auto w = (dir / "w.bin").string();
    REQUIRE(run("gen-weights --out " + w) == 0);
    CHECK(run("infer --weights " + w + " --input /nonexistent/e.csv --out-dir " + dir.string()) ==
          2);
    // malformed config
    const auto cfg = dir / "bad.json";
    std::ofstream(cfg) << "{\"d_model\": 3}";
    CHECK(run("infer --config " + cfg.string() + " --synth 1 --out-dir " + dir.string()) == 3);
    CHECK(run("gen-weights --scale 0 --out " + w) == 1);
}

TEST_CASE("exp-error emits the requested term range") {
    const auto dir = work_dir() / "run4";
    fs::remove_all(dir);
    REQUIRE(run("exp-error --terms 2:3 --range -1:0 --grid 65 --out-dir " + dir.string()) == 0);
    const auto csv = read_file(dir / "exp_error.csv");
    CHECK(csv.rfind("terms,max_err_fixed,mean_err_fixed,max_err_real,mean_err_real\n", 0) == 0);
    CHECK(csv.find("\n2,") != std::string::npos);
    CHECK(csv.find("\n3,") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("sweep grid lands in a csv") {
    const auto dir = work_dir() / "run5";
    fs::remove_all(dir);
    REQUIRE(run("sweep --sweep 8:8,8:8 --epochs 2 --seed 3 --serial --out-dir " + dir.string()) ==
            0);
    const auto csv = read_file(dir / "sweep.csv");
    CHECK(csv.rfind("weight_bits,act_bits,agreement,mse\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("out dir falls back to the environment") {
    const auto dir = work_dir() / "run6";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto w = (dir / "w.bin").string();
    REQUIRE(run("gen-weights --out " + w) == 0);
    const std::string cmd = "VITSIM_OUT_DIR=" + dir.string() + " \"" + std::string(cli_path()) +
                            "\" infer --weights " + w + " --synth 1 >/dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(dir / "synth.results.csv"));
}
