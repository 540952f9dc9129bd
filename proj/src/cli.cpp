#include "fetv/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "fetv/dtv.hpp"
#include "fetv/error.hpp"
#include "fetv/io.hpp"
#include "fetv/metrics.hpp"
#include "fetv/rng.hpp"
#include "fetv/solvers.hpp"

namespace fetv::cli {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct ImageOptions {
    std::string input;
    std::string synthetic = "ball";
    int size = 64;
    double pixel_size = 0;
    int degree = 0;
};

void add_image_options(CLI::App* app, ImageOptions& o) {
    app->add_option("--input", o.input, "PGM image (P2/P5)");
    app->add_option("--synthetic", o.synthetic, "synthetic image: ball, step, ramp, constant")->capture_default_str();
    app->add_option("--size", o.size, "pixels per side of a synthetic image")->capture_default_str()->check(
        CLI::PositiveNumber);
    app->add_option("--pixel-size", o.pixel_size, "physical pixel size (default 1/max(width, height))");
    app->add_option("--degree", o.degree, "polynomial degree r")->capture_default_str()->check(CLI::Range(0, 2));
}

struct LoadedImage {
    std::shared_ptr<const Discretization> disc;
    DgFunction u;
    int width = 0, height = 0;
};

LoadedImage load_image(const ImageOptions& o) {
    LoadedImage img;
    if (!o.input.empty()) {
        const Raster ras = load_pgm(o.input);
        RasterImage ri = raster_to_dg(ras, o.degree, o.pixel_size);
        img.disc = std::make_shared<const Discretization>(ri.mesh, o.degree);
        img.u = std::move(ri.u);
        img.width = ras.width;
        img.height = ras.height;
        return img;
    }
    // synthetic images are interpolated at the Lagrange nodes, not per pixel
    const auto f = synthetic_image(o.synthetic);
    const double h = o.pixel_size > 0 ? o.pixel_size : 1.0 / o.size;
    const double L = h * o.size;
    auto mesh = std::make_shared<const Mesh>(build_crossed_mesh(o.size, o.size, L, L));
    img.disc = std::make_shared<const Discretization>(mesh, o.degree);
    img.u = interpolate(*img.disc, [&](const Vec2& x) { return f(x / L); });
    img.width = img.height = o.size;
    return img;
}

struct SolveOptions {
    ImageOptions image;
    std::string algorithm;
    std::string fidelity;
    std::string s = "2";
    double beta = 1e-3;
    double huber_eps = 0;
    std::string noise_model = "gaussian";
    double noise = 0.1;
    double impulse = 0.1;
    std::uint64_t seed = 0;
    std::string mask;
    double mask_fraction = -1;
    std::uint64_t mask_seed = 1;
    std::string output, report, save_noisy, save_mask;
    SolverParams params;
    std::string inner = "cg";
};

void add_solve_options(CLI::App* app, SolveOptions& o, bool inpaint) {
    add_image_options(app, o.image);
    app->add_option("--algorithm", o.algorithm,
                    "split-bregman, chambolle-pock, chambolle-projection, cp-l1, admm-l1");
    app->add_option("--fidelity", o.fidelity, "l2 or l1 (default follows the algorithm)");
    app->add_option("--s", o.s, "pointwise norm: 1 or 2")->capture_default_str();
    app->add_option("--beta", o.beta, "regularization weight")->capture_default_str();
    app->add_option("--lambda", o.params.lambda, "split Bregman / ADMM penalty")->capture_default_str();
    app->add_option("--sigma-step", o.params.sigma, "primal step (0: automatic)");
    app->add_option("--tau", o.params.tau, "dual step (0: automatic)");
    app->add_option("--step-ratio", o.params.step_ratio, "sigma/tau when both steps are automatic")
        ->capture_default_str();
    app->add_option("--theta", o.params.theta, "extrapolation")->capture_default_str();
    app->add_option("--scale", o.params.S, "metric scale S on cell gradients (0: 1 for r=0, 1e-2 otherwise)");
    app->add_option("--huber-eps", o.huber_eps, "Huber smoothing (s = 2 only)");
    app->add_option("--tol-rel", o.params.tol_rel, "gap tolerance relative to eta(f,0)")->capture_default_str();
    app->add_option("--infeas-cap", o.params.infeas_cap, "infeasibility bound")->capture_default_str();
    app->add_option("--max-iter", o.params.max_iter, "iteration limit")->capture_default_str();
    app->add_option("--inner", o.inner, "inner solver for split Bregman / ADMM: cg or gs")->capture_default_str();
    app->add_option("--inner-tol", o.params.inner_tol, "inner relative residual")->capture_default_str();
    app->add_option("--l1-change-tol", o.params.l1_change_tol, "L1 stop: relative change")->capture_default_str();
    app->add_option("--l1-patience", o.params.l1_patience, "L1 stop: consecutive iterations")->capture_default_str();
    app->add_option("--seed", o.seed, "noise seed")->capture_default_str();
    app->add_option("--noise-model", o.noise_model, "gaussian or impulse")->capture_default_str();
    app->add_option("--noise", o.noise, "Gaussian standard deviation per dof")->capture_default_str();
    app->add_option("--impulse", o.impulse, "fraction of dofs hit by impulse noise")->capture_default_str();
    app->add_option("--mask", o.mask, "inpainting mask: text cell list or PGM");
    if (inpaint) {
        app->add_option("--mask-fraction", o.mask_fraction, "random fraction of cells to erase (default 2/3)");
        app->add_option("--mask-seed", o.mask_seed, "seed for the random mask")->capture_default_str();
        app->add_option("--save-mask", o.save_mask, "write the mask as a text cell list");
    }
    app->add_option("--output", o.output, "output PGM");
    app->add_option("--save-noisy", o.save_noisy, "write the noisy input as PGM");
    app->add_option("--report", o.report, "report JSON");
}

SNorm parse_solver_s(const std::string& s) {
    if (s != "1" && s != "2") throw ConfigError("solvers accept s = 1 or s = 2, got '" + s + "'");
    return parse_snorm(s);
}

Fidelity parse_fidelity(const std::string& s) {
    if (s == "l2" || s == "L2") return Fidelity::L2;
    if (s == "l1" || s == "L1") return Fidelity::L1;
    throw ConfigError("fidelity must be l2 or l1, got '" + s + "'");
}

int cmd_solve(SolveOptions& o, bool inpaint, std::ostream& out, std::ostream& err) {
    const SNorm s = parse_solver_s(o.s);
    std::optional<Fidelity> fid;
    if (!o.fidelity.empty()) fid = parse_fidelity(o.fidelity);
    if (o.algorithm.empty()) {
        if (fid == Fidelity::L1) o.algorithm = "admm-l1";
        else o.algorithm = inpaint ? "chambolle-pock" : "split-bregman";
    }
    o.params.algorithm = parse_algorithm(o.algorithm);
    o.params.seed = o.seed;
    if (o.inner == "cg") o.params.inner = InnerSolverKind::ConjugateGradient;
    else if (o.inner == "gs") o.params.inner = InnerSolverKind::GaussSeidel;
    else throw ConfigError("inner solver must be cg or gs");
    const Fidelity fidelity = fid.value_or(fidelity_of(o.params.algorithm));
    if (fidelity == Fidelity::L1 && o.image.degree > 1)
        throw ConfigError("L1 fidelity needs strictly positive lumped weights C_{T,k}; r = " +
                          std::to_string(o.image.degree) + " has zero weights (use r = 0 or r = 1)");
    if (!(o.beta > 0)) throw ConfigError("beta must be positive");

    LoadedImage img = load_image(o.image);
    const Discretization& disc = *img.disc;
    DgFunction f;
    if (o.noise_model == "gaussian") f = add_noise(img.u, {o.noise, o.seed});
    else if (o.noise_model == "impulse") f = add_salt_pepper(img.u, o.impulse, o.seed);
    else throw ConfigError("noise model must be gaussian or impulse");

    CellMask mask;
    if (!o.mask.empty()) {
        mask = load_mask(o.mask, disc.mesh());
    } else if (inpaint) {
        const double frac = o.mask_fraction >= 0 ? o.mask_fraction : 2.0 / 3.0;
        mask = random_cell_mask(disc.mesh().num_cells(), frac, o.mask_seed);
    }
    if (!o.save_mask.empty()) save_mask(mask.empty() ? full_mask(disc.mesh().num_cells()) : mask, o.save_mask);

    ProblemSpec spec = make_problem(img.disc, f, mask, o.beta, s, fidelity);
    spec.huber_eps = o.huber_eps;
    spec.reference = img.u;
    validate(spec, o.params);

    const double input_psnr = psnr(disc, spec.f, img.u);
    if (!o.save_noisy.empty()) save_pgm(dg_to_raster(disc, spec.f, img.width, img.height), o.save_noisy);

    const SolverResult res = solve(spec, o.params);
    int outside = 0;
    if (!o.output.empty()) save_pgm(dg_to_raster(disc, res.u, img.width, img.height, &outside), o.output);
    if (outside > 0) err << "warning: " << outside << " pixel centers outside the mesh\n";

    nlohmann::json rep;
    rep["command"] = inpaint ? "inpaint" : "denoise";
    rep["image"] = o.image.input.empty() ? o.image.synthetic : o.image.input;
    rep["width"] = img.width;
    rep["height"] = img.height;
    rep["cells"] = disc.mesh().num_cells();
    rep["dofs"] = disc.dofs().dg_size();
    rep["noise_model"] = o.noise_model;
    rep["noise"] = o.noise_model == "gaussian" ? o.noise : o.impulse;
    rep["seed"] = o.seed;
    rep["input_psnr"] = std::isfinite(input_psnr) ? nlohmann::json(input_psnr) : nlohmann::json("inf");
    rep["outside_pixels"] = outside;
    rep["solver"] = to_json(res.report);
    if (!o.report.empty()) write_file(o.report, rep.dump(2) + "\n");

    const auto& r = res.report;
    out << "algorithm=" << r.algorithm << "\n"
        << "converged=" << (r.converged ? "true" : "false") << "\n"
        << "iterations=" << r.iterations << "\n"
        << "seconds=" << num(r.seconds) << "\n"
        << "objective=" << num(r.objective) << "\n";
    if (fidelity == Fidelity::L2) out << "gap_ratio=" << num(r.gap / r.gap_reference) << "\n";
    else out << "certificate=" << num(r.certificate) << "\n";
    out << "infeasibility=" << num(r.infeasibility) << "\n"
        << "input_psnr=" << num(input_psnr) << "\n"
        << "psnr=" << num(r.psnr.value_or(std::nan(""))) << "\n";
    if (!r.converged) err << "warning: no convergence within " << o.params.max_iter << " iterations\n";
    return r.converged ? kOk : kNotConverged;
}

struct DtvOptions {
    ImageOptions image;
    std::string mesh, coeffs;
    bool diagonal_step = false;
    double angle = 0;
    std::optional<std::uint64_t> random;
    std::string s = "2";
};

int cmd_dtv(const DtvOptions& o, std::ostream& out) {
    const SNorm s = parse_snorm(o.s);
    std::shared_ptr<const Discretization> disc;
    DgFunction u;
    const int r = o.image.degree;
    if (o.diagonal_step) {
        auto mesh = std::make_shared<const Mesh>(build_diagonal_square(o.angle));
        disc = std::make_shared<const Discretization>(mesh, r);
        u = disc->zero_function();
        u.coeffs.segment(disc->dofs().dg(1, 0), disc->dofs().nk).setOnes();
    } else if (!o.mesh.empty()) {
        auto mesh = std::make_shared<const Mesh>(load_mesh(o.mesh));
        disc = std::make_shared<const Discretization>(mesh, r);
        u = disc->zero_function();
        if (!o.coeffs.empty()) {
            u.coeffs = read_vector_file(o.coeffs);
            if (u.coeffs.size() != disc->dofs().dg_size())
                throw ConfigError("coefficient file has " + std::to_string(u.coeffs.size()) + " values, expected " +
                                  std::to_string(disc->dofs().dg_size()));
        }
    } else {
        LoadedImage img = load_image(o.image);
        disc = img.disc;
        u = std::move(img.u);
    }
    if (o.random) {
        Rng rng(*o.random);
        for (Eigen::Index k = 0; k < u.coeffs.size(); ++k) u.coeffs[k] = rng.uniform();
    }
    const double d = dtv(*disc, u, s);
    const double t = tv_exact(*disc, u, s);
    out << "dtv=" << num(d) << "\n" << "tv_exact=" << num(t) << "\n" << "difference=" << num(d - t) << "\n";
    return kOk;
}

struct MeshOptions {
    int nx = 1, ny = 1;
    double width = 0, height = 0;
    std::string output;
};

int cmd_make_mesh(const MeshOptions& o, std::ostream& out) {
    const double h = 1.0 / std::max(o.nx, o.ny);
    const double w = o.width > 0 ? o.width : h * o.nx;
    const double ht = o.height > 0 ? o.height : h * o.ny;
    const Mesh mesh = build_crossed_mesh(o.nx, o.ny, w, ht);
    if (o.output.empty() || o.output == "-") out << format_mesh(mesh);
    else save_mesh(mesh, o.output);
    return kOk;
}

struct NoiseOptions {
    std::string input, output;
    double sigma = 0.1;
    double impulse = 0;
    std::uint64_t seed = 0;
};

bool is_vector_file(const std::string& path) {
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".vec") == 0;
}

int cmd_add_noise(const NoiseOptions& o) {
    if (!(o.sigma >= 0)) throw ConfigError("sigma must be nonnegative");
    auto perturb = [&](const Eigen::VectorXd& v) {
        DgFunction u{0, v};
        if (o.impulse > 0) u = add_salt_pepper(u, o.impulse, o.seed);
        return add_noise(u, {o.sigma, o.seed}).coeffs;
    };
    if (is_vector_file(o.input)) {
        write_vector_file(o.output, perturb(read_vector_file(o.input)));
        return kOk;
    }
    Raster ras = load_pgm(o.input);
    const Eigen::VectorXd v = perturb(Eigen::Map<const Eigen::VectorXd>(ras.values.data(), ras.values.size()));
    for (size_t k = 0; k < ras.values.size(); ++k) ras.values[k] = std::clamp(v[static_cast<Eigen::Index>(k)], 0.0, 1.0);
    save_pgm(ras, o.output);
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Discrete total variation on DG spaces: denoising, inpainting and diagnostics", "fetv"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "preset file (TOML, options under [denoise] or [inpaint])");

    SolveOptions den, inp;
    add_solve_options(app.add_subcommand("denoise", "denoise an image"), den, false);
    add_solve_options(app.add_subcommand("inpaint", "inpaint and denoise an image"), inp, true);

    DtvOptions dto;
    auto* dsub = app.add_subcommand("dtv", "print dtv, tv_exact and their difference");
    add_image_options(dsub, dto.image);
    dsub->add_option("--mesh", dto.mesh, "mesh file");
    dsub->add_option("--coeffs", dto.coeffs, "coefficient vector file for --mesh");
    dsub->add_flag("--diagonal-step", dto.diagonal_step, "two-triangle step: 0 on cell 0, 1 on cell 1");
    dsub->add_option("--angle", dto.angle, "rotation of the two-triangle square (radians)");
    dsub->add_option("--random", dto.random, "replace the coefficients by uniform [0,1] draws with this seed");
    dsub->add_option("--s", dto.s, "pointwise norm: 1, 2 or inf")->capture_default_str();

    MeshOptions mo;
    auto* msub = app.add_subcommand("make-mesh", "write a crossed-diagonal mesh");
    msub->add_option("nx", mo.nx, "squares in x")->required()->check(CLI::PositiveNumber);
    msub->add_option("ny", mo.ny, "squares in y")->required()->check(CLI::PositiveNumber);
    msub->add_option("--width", mo.width, "domain width (default nx / max(nx, ny))");
    msub->add_option("--height", mo.height, "domain height (default ny / max(nx, ny))");
    msub->add_option("--output,-o", mo.output, "mesh file (default stdout)");

    NoiseOptions no;
    auto* nsub = app.add_subcommand("add-noise", "add Gaussian (and optional impulse) noise to a PGM or .vec file");
    nsub->add_option("--input", no.input, "input PGM or .vec")->required();
    nsub->add_option("--output", no.output, "output file")->required();
    nsub->add_option("--sigma", no.sigma, "Gaussian standard deviation")->capture_default_str();
    nsub->add_option("--impulse", no.impulse, "impulse fraction")->capture_default_str();
    nsub->add_option("--seed", no.seed, "seed")->capture_default_str();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }
    try {
        if (app.got_subcommand("denoise")) return cmd_solve(den, false, out, err);
        if (app.got_subcommand("inpaint")) return cmd_solve(inp, true, out, err);
        if (app.got_subcommand("dtv")) return cmd_dtv(dto, out);
        if (app.got_subcommand("make-mesh")) return cmd_make_mesh(mo, out);
        if (app.got_subcommand("add-noise")) return cmd_add_noise(no);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

}  // namespace fetv::cli
