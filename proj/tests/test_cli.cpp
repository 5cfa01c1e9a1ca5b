#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "automap/io.hpp"
#include "automap/network.hpp"
#include "automap/encode.hpp"

using namespace automap;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("automap_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

struct CliResult {
    int code;
    std::string out, err;
};

CliResult run_cli(const std::string& args, const std::string& dir) {
    std::string out_file = dir + "/stdout.txt", err_file = dir + "/stderr.txt";
    std::string cmd = std::string(AUTOMAP_CLI_PATH) + " " + args + " >" + out_file + " 2>" + err_file;
    int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    auto slurp = [](const std::string& p) {
        std::ifstream f(p);
        return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    };
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("gen-data is deterministic and validates flags") {
        TempDir dir("gen");
        std::string base = "gen-data --kind synth --count 8 --n 8 --seed 1 --out ";
        CHECK(run_cli(base + dir.str() + "/a.bin", dir.str()).code == 0);
        CHECK(run_cli(base + dir.str() + "/b.bin", dir.str()).code == 0);
        CHECK(read_file(dir.str() + "/a.bin") == read_file(dir.str() + "/b.bin"));

        CliResult missing = run_cli("gen-data --kind synth --count 8 --n 8 --seed 1", dir.str());
        CHECK(missing.code == 2);
        CHECK(missing.err.find("--out") != std::string::npos);

        CHECK(run_cli("gen-data --kind synth --count 0 --n 8 --seed 1 --out " + dir.str() + "/c.bin",
                      dir.str()).code == 2);
    }

    TEST_CASE("unwritable output is an I/O failure (exit 3)") {
        TempDir dir("io");
        CliResult r = run_cli("gen-data --kind synth --count 2 --n 8 --seed 1 --out /dev/null/x/c.bin",
                              dir.str());
        CHECK(r.code == 3);
    }

    TEST_CASE("train produces identical checkpoints for identical flags and seeds") {
        TempDir dir("train");
        std::string corpus = dir.str() + "/c.bin";
        REQUIRE(run_cli("gen-data --kind synth --count 6 --n 8 --seed 3 --out " + corpus, dir.str())
                    .code == 0);
        std::string flags = "train --corpus " + corpus +
                            " --encoding cartesian --n 8 --target magnitude --seed 7 "
                            "--epochs 2 --lr 0.001 --out-ckpt ";
        REQUIRE(run_cli(flags + dir.str() + "/a.amap", dir.str()).code == 0);
        REQUIRE(run_cli(flags + dir.str() + "/b.amap", dir.str()).code == 0);
        CHECK(read_file(dir.str() + "/a.amap") == read_file(dir.str() + "/b.amap"));
        CHECK(fs::exists(dir.str() + "/a.amap.history.csv"));

        // manifest echoes the effective config; defaults keep the paper lr
        std::string flags_default = "train --corpus " + corpus +
                                    " --encoding cartesian --n 8 --target magnitude --seed 7 "
                                    "--epochs 1 --out-ckpt " + dir.str() + "/d.amap";
        REQUIRE(run_cli(flags_default, dir.str()).code == 0);
        auto manifest = nlohmann::json::parse(read_file(dir.str() + "/manifest.json"));
        CHECK(manifest.at("config").at("learning_rate").get<double>() == 2e-5);
        CHECK(manifest.at("status") == "ok");
    }

    TEST_CASE("radon training with a phase seed is rejected with exit 2") {
        TempDir dir("radonphase");
        std::string corpus = dir.str() + "/c.bin";
        REQUIRE(run_cli("gen-data --kind synth --count 4 --n 8 --seed 3 --out " + corpus, dir.str())
                    .code == 0);
        CliResult r = run_cli("train --corpus " + corpus +
                                  " --encoding radon --n 8 --phase-seed 5 --target magnitude "
                                  "--seed 7 --epochs 1 --out-ckpt " + dir.str() + "/r.amap",
                              dir.str());
        CHECK(r.code == 2);
    }

    TEST_CASE("evaluate: clean cartesian ifft is exact, runs are byte-identical, n mismatch is 5") {
        TempDir dir("eval");
        std::string corpus = dir.str() + "/c.bin";
        std::string test_corpus = dir.str() + "/t.bin";
        REQUIRE(run_cli("gen-data --kind synth --count 6 --n 8 --seed 3 --out " + corpus, dir.str())
                    .code == 0);
        REQUIRE(run_cli("gen-data --kind synth --count 3 --n 8 --seed 4 --out " + test_corpus,
                        dir.str()).code == 0);
        REQUIRE(run_cli("train --corpus " + corpus +
                            " --encoding cartesian --n 8 --target magnitude --seed 7 --epochs 1 "
                            "--lr 0.001 --out-ckpt " + dir.str() + "/m.amap",
                        dir.str()).code == 0);

        std::string eval_flags = "evaluate --ckpt " + dir.str() + "/m.amap --test-corpus " +
                                 test_corpus + " --snr-db clean --seed 1 --out-dir ";
        REQUIRE(run_cli(eval_flags + dir.str() + "/e1", dir.str()).code == 0);
        REQUIRE(run_cli(eval_flags + dir.str() + "/e2", dir.str()).code == 0);
        CHECK(read_file(dir.str() + "/e1/metrics.csv") == read_file(dir.str() + "/e2/metrics.csv"));

        // ifft rows must be numerically exact reconstructions
        std::string csv = read_file(dir.str() + "/e1/metrics.csv");
        size_t pos = 0;
        int ifft_rows = 0;
        std::istringstream ss(csv);
        std::string line;
        while (std::getline(ss, line)) {
            if (line.find(",ifft,") == std::string::npos) continue;
            ++ifft_rows;
            size_t a = line.find(",ifft,") + 6;
            size_t b = line.find(',', a);
            double rmse = std::stod(line.substr(a, b - a));
            CHECK(rmse < 1e-9);
        }
        CHECK(ifft_rows == 3);
        (void)pos;

        // corpus with the wrong side
        REQUIRE(run_cli("gen-data --kind synth --count 3 --n 16 --seed 4 --out " + dir.str() +
                            "/t16.bin", dir.str()).code == 0);
        CliResult bad = run_cli("evaluate --ckpt " + dir.str() + "/m.amap --test-corpus " +
                                    dir.str() + "/t16.bin --snr-db clean --out-dir " + dir.str() +
                                    "/e3", dir.str());
        CHECK(bad.code == 5);
    }

    TEST_CASE("analyze reports sparsity 1.0 for a zero-initialized checkpoint") {
        TempDir dir("analyze");
        std::string corpus = dir.str() + "/c.bin";
        REQUIRE(run_cli("gen-data --kind synth --count 3 --n 8 --seed 3 --out " + corpus, dir.str())
                    .code == 0);
        // write a zero checkpoint directly through the library
        NetParams p;
        shape_like(p, 2 * 8 * 8, 8);
        EncodingOperator op = make_encoding(EncodingKind::cartesian, 8, 0);
        save_checkpoint(dir.str() + "/zero.amap", p,
                        {{"sensor_scale", 1.0},
                         {"encoding", encoding_to_json(op)},
                         {"target_mode", "magnitude"}});
        REQUIRE(run_cli("analyze --ckpt " + dir.str() + "/zero.amap --inputs " + corpus +
                            " --out-dir " + dir.str() + "/an", dir.str()).code == 0);
        auto stats = nlohmann::json::parse(read_file(dir.str() + "/an/stats.json"));
        CHECK(stats.at("sparsity_fraction").get<double>() == 1.0);
        CHECK(fs::exists(dir.str() + "/an/fc_weights.csv"));
        CHECK(fs::exists(dir.str() + "/an/kernels/montage.pgm"));
    }

    TEST_CASE("baseline art emits a 10-row residual history per image") {
        TempDir dir("art");
        std::string corpus = dir.str() + "/c.bin";
        REQUIRE(run_cli("gen-data --kind synth --count 2 --n 8 --seed 3 --out " + corpus, dir.str())
                    .code == 0);
        REQUIRE(run_cli("baseline --method art --corpus " + corpus +
                            " --n 8 --sweeps 10 --out-dir " + dir.str() + "/b", dir.str()).code == 0);
        std::string res = read_file(dir.str() + "/b/residuals.csv");
        int rows = 0;
        std::istringstream ss(res);
        std::string line;
        std::getline(ss, line);  // header
        while (std::getline(ss, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 2 * 10);
    }

    TEST_CASE("unknown method is a usage error") {
        TempDir dir("badmethod");
        CliResult r = run_cli("baseline --method wavelets --corpus x --n 8 --out-dir " + dir.str(),
                              dir.str());
        CHECK(r.code == 2);
    }

    TEST_CASE("numeric abort exits 4 and records epoch/batch in the manifest") {
        TempDir dir("numabort");
        std::string corpus = dir.str() + "/c.bin";
        REQUIRE(run_cli("gen-data --kind synth --count 4 --n 8 --seed 3 --out " + corpus, dir.str())
                    .code == 0);
        CliResult r = run_cli("train --corpus " + corpus +
                                  " --encoding cartesian --n 8 --target magnitude --seed 1 "
                                  "--epochs 50 --lr 1e30 --out-ckpt " + dir.str() + "/x.amap",
                              dir.str());
        CHECK(r.code == 4);
        auto manifest = nlohmann::json::parse(read_file(dir.str() + "/manifest.json"));
        std::string err = manifest.at("error").get<std::string>();
        CHECK(err.find("epoch") != std::string::npos);
        CHECK(err.find("batch") != std::string::npos);
    }

    TEST_CASE("failure manifests carry the error") {
        TempDir dir("failman");
        CliResult r = run_cli("train --corpus " + dir.str() +
                                  "/missing.bin --encoding cartesian --n 8 --target magnitude "
                                  "--seed 1 --epochs 1 --out-ckpt " + dir.str() + "/x.amap",
                              dir.str());
        CHECK(r.code == 3);
        auto manifest = nlohmann::json::parse(read_file(dir.str() + "/manifest.json"));
        CHECK(manifest.at("status") == "error");
        CHECK(!manifest.at("error").get<std::string>().empty());
    }
}
