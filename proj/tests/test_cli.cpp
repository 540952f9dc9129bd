#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "fetv/cli.hpp"
#include "fetv/io.hpp"
#include "fetv/mesh.hpp"
#include "json.hpp"

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = fetv::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string tmp(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "fetv_cli_test";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

std::string field(const std::string& out, const std::string& key) {
    std::istringstream in(out);
    std::string line;
    while (std::getline(in, line))
        if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
    return {};
}

}  // namespace

TEST_CASE("usage errors") {
    CHECK(run({}).code == fetv::cli::kUsage);
    CHECK(run({"no-such-command"}).code == fetv::cli::kUsage);
    CHECK(run({"--help"}).code == fetv::cli::kOk);
    CHECK(run({"denoise", "--degree", "5"}).code == fetv::cli::kUsage);
    CHECK(run({"denoise", "--s", "3"}).code == fetv::cli::kUsage);
    const Run l1 = run({"denoise", "--fidelity", "l1", "--degree", "2", "--size", "4"});
    CHECK(l1.code == fetv::cli::kUsage);
    CHECK(l1.err.find("lumped weights") != std::string::npos);
    CHECK(run({"denoise", "--input", tmp("missing.pgm")}).code == fetv::cli::kUsage);
}

TEST_CASE("make-mesh") {
    const Run r = run({"make-mesh", "4", "4"});
    REQUIRE(r.code == 0);
    const fetv::Mesh m = fetv::parse_mesh(r.out);
    CHECK(m.num_cells() == 64);
    CHECK(m.total_area() == doctest::Approx(1.0));
    const std::string path = tmp("m.mesh");
    CHECK(run({"make-mesh", "3", "1", "-o", path}).code == 0);
    const fetv::Mesh w = fetv::load_mesh(path);
    CHECK(w.num_cells() == 12);
    CHECK(w.total_area() == doctest::Approx(1.0 / 3));
}

TEST_CASE("dtv subcommand") {
    const Run c = run({"dtv", "--synthetic", "constant", "--size", "4"});
    REQUIRE(c.code == 0);
    CHECK(std::stod(field(c.out, "dtv")) == 0.0);
    CHECK(std::stod(field(c.out, "tv_exact")) == 0.0);
    const Run d = run({"dtv", "--diagonal-step", "--angle", "0.4"});
    REQUIRE(d.code == 0);
    CHECK(std::stod(field(d.out, "dtv")) == doctest::Approx(std::sqrt(2.0)));
    const Run r = run({"dtv", "--random", "3", "--degree", "0", "--size", "4", "--s", "inf"});
    REQUIRE(r.code == 0);
    CHECK(std::abs(std::stod(field(r.out, "difference"))) < 1e-12);
}

TEST_CASE("add-noise is deterministic") {
    const std::string in = tmp("in.pgm"), a = tmp("a.pgm"), b = tmp("b.pgm"), z = tmp("z.pgm");
    fetv::save_pgm(fetv::synthetic_raster("ball", 16, 16), in);
    CHECK(run({"add-noise", "--input", in, "--output", a, "--sigma", "0.1", "--seed", "4"}).code == 0);
    CHECK(run({"add-noise", "--input", in, "--output", b, "--sigma", "0.1", "--seed", "4"}).code == 0);
    CHECK(fetv::read_file(a) == fetv::read_file(b));
    CHECK(fetv::read_file(a) != fetv::read_file(in));
    CHECK(run({"add-noise", "--input", in, "--output", z, "--sigma", "0"}).code == 0);
    CHECK(fetv::read_file(z) == fetv::read_file(in));
}

TEST_CASE("denoise writes outputs and reports convergence") {
    const std::string out = tmp("den.pgm"), rep = tmp("den.json"), noisy = tmp("noisy.pgm");
    const Run r = run({"denoise", "--size", "16", "--algorithm", "cp", "--output", out, "--report", rep,
                       "--save-noisy", noisy});
    REQUIRE(r.code == fetv::cli::kOk);
    CHECK(field(r.out, "converged") == "true");
    CHECK(std::stod(field(r.out, "psnr")) > std::stod(field(r.out, "input_psnr")));
    const fetv::Raster img = fetv::load_pgm(out);
    CHECK(img.width == 16);
    CHECK(img.height == 16);
    CHECK(fetv::load_pgm(noisy).width == 16);
    const auto j = nlohmann::json::parse(fetv::read_file(rep));
    CHECK(j["command"] == "denoise");
    CHECK(j["cells"] == 1024);
    CHECK(j["solver"]["converged"] == true);
    CHECK(j["solver"]["algorithm"] == "chambolle-pock");
}

TEST_CASE("iteration limit gives exit code 2") {
    const Run r = run({"denoise", "--size", "8", "--max-iter", "2"});
    CHECK(r.code == fetv::cli::kNotConverged);
    CHECK(field(r.out, "converged") == "false");
}

TEST_CASE("inpaint with a saved mask") {
    const std::string mask = tmp("mask.txt");
    const Run r = run({"inpaint", "--size", "8", "--mask-fraction", "0.5", "--save-mask", mask, "--step-ratio", "1000",
                       "--max-iter", "20000"});
    CHECK(r.code == fetv::cli::kOk);
    const fetv::Mesh m = fetv::build_crossed_mesh(8, 8, 1, 1);
    const fetv::CellMask cm = fetv::load_mask(mask, m);
    CHECK(std::count(cm.begin(), cm.end(), std::uint8_t{0}) == 128);
    const Run again = run({"inpaint", "--size", "8", "--mask", mask, "--step-ratio", "1000", "--max-iter", "20000"});
    CHECK(again.code == fetv::cli::kOk);
    CHECK(field(again.out, "objective") == field(r.out, "objective"));
}

TEST_CASE("config file with command line override") {
    const std::string cfg = tmp("cfg.toml");
    fetv::write_file(cfg, "[denoise]\nsize = 8\nmax-iter = 2\nalgorithm = \"chambolle-pock\"\n");
    CHECK(run({"denoise", "--config", cfg}).code == fetv::cli::kNotConverged);
    CHECK(run({"denoise", "--config", cfg, "--max-iter", "20000"}).code == fetv::cli::kOk);
}
