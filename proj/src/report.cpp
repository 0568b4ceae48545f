#include "nlhomog/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "nlhomog/cell_problem.hpp"
#include "nlhomog/errors.hpp"
#include "nlhomog/extension.hpp"
#include "nlhomog/gamma_harness.hpp"
#include "nlhomog/random.hpp"

namespace nlhomog {

Subcommand subcommand_from_string(const std::string& name) {
    if (name == "cell") return Subcommand::cell;
    if (name == "gamma") return Subcommand::gamma;
    if (name == "extend") return Subcommand::extend;
    if (name == "degenerate") return Subcommand::degenerate;
    if (name == "kernel-info") return Subcommand::kernel_info;
    throw std::invalid_argument("unknown subcommand '" + name + "'");
}

std::string to_string(Subcommand s) {
    switch (s) {
        case Subcommand::cell: return "cell";
        case Subcommand::gamma: return "gamma";
        case Subcommand::extend: return "extend";
        case Subcommand::degenerate: return "degenerate";
        case Subcommand::kernel_info: return "kernel-info";
    }
    return "?";
}

std::string format_number(double x) { return fmt::format("{:.17g}", x); }

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header, std::uint64_t config_hash)
    : out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()), hash_(config_hash) {
    if (!out_) throw std::runtime_error("cannot write '" + path + "'");
    row(header);
}

CsvWriter::~CsvWriter() {
    try {
        close();
    } catch (...) {
    }
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw std::logic_error("CSV row width differs from header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

void CsvWriter::close() {
    if (closed_) return;
    closed_ = true;
    out_ << fmt::format("# config_hash={:016x}\n", hash_);
    out_.close();
}

int RunResult::exit_code() const {
    return std::all_of(checks.begin(), checks.end(), [](const ReportRow& r) { return r.pass; }) ? 0 : 1;
}

namespace {

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + format_number(v[i]);
    return s;
}

struct Context {
    const RunConfig& cfg;
    std::filesystem::path dir;
    std::ostream& log;
    RunResult result;

    std::string path(const std::string& name) {
        result.files.push_back(name);
        return (dir / name).string();
    }
    void check(std::string id, std::string params, double measured, double tol, bool pass) {
        log << fmt::format("  [{}] {} measured={} tolerance={}\n", pass ? "ok" : "FAIL", id, format_number(measured),
                           format_number(tol));
        result.checks.push_back({std::move(id), std::move(params), measured, tol, pass});
    }
};

HomResult hom_without_psd_throw(const TorusGrid& grid, const KernelSpec& kernel, double R, const CellOptions& opts) {
    return homogenized_matrix(grid, kernel, R, opts, std::numeric_limits<double>::infinity());
}

void write_form_stats(Context& ctx, const std::string& name,
                      const std::vector<std::pair<std::string, FormStats>>& stats) {
    CsvWriter w(ctx.path(name), {"assembly", "nodes", "edges", "components"}, ctx.cfg.hash);
    for (const auto& [label, s] : stats)
        w.row({label, std::to_string(s.nodes), std::to_string(s.edges), std::to_string(s.components)});
}

void psd_check(Context& ctx, const HomResult& h, const std::string& params) {
    const double scale = std::max(std::abs(h.A.trace()), std::numeric_limits<double>::min());
    const double lam = h.eigenvalues(0);
    ctx.check("psd", params, lam, -1e-8 * scale, lam >= -1e-8 * scale);
}

void run_cell(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const double R = cfg.truncation_radius();
    const TorusGrid grid = build_grid(cfg.perforation, cfg.n, cfg.cells);
    ctx.log << fmt::format("cell: n={} cells={} R={} points in E={}\n", cfg.n, cfg.cells, format_number(R),
                           grid.count_in_E());
    const HomResult h = hom_without_psd_throw(grid, cfg.kernel, R, cfg.options);
    const int d = cfg.dimension;

    {
        std::vector<std::string> header{"row"};
        for (int j = 0; j < d; ++j) header.push_back("A_" + std::to_string(j + 1));
        CsvWriter w(ctx.path("A_hom.csv"), header, cfg.hash);
        for (int i = 0; i < d; ++i) {
            std::vector<std::string> cells{std::to_string(i + 1)};
            for (int j = 0; j < d; ++j) cells.push_back(format_number(h.A(i, j)));
            w.row(cells);
        }
    }
    {
        CsvWriter w(ctx.path("cell_diagnostics.csv"),
                    {"z", "value", "affine_bound", "iterations", "residual", "tail_bound", "null_space_dim"}, cfg.hash);
        for (const auto& s : h.solves)
            w.row({join(s.z), format_number(s.value), format_number(s.affine_bound),
                   std::to_string(s.report.iterations), format_number(s.report.residual), format_number(s.tail_bound),
                   std::to_string(s.report.null_space_dim)});
    }
    {
        std::vector<std::pair<std::string, FormStats>> stats;
        for (const auto& s : h.solves) stats.emplace_back("z=" + join(s.z), s.stats);
        write_form_stats(ctx, "cell_form_stats.csv", stats);
    }

    ctx.log << "A_hom =\n";
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) ctx.log << ' ' << format_number(h.A(i, j));
        ctx.log << '\n';
    }

    const std::string params = fmt::format("n={};cells={};R={}", cfg.n, cfg.cells, format_number(R));
    psd_check(ctx, h, params);
    for (const auto& s : h.solves) {
        const double slack = 1e-12 * std::max(1.0, s.affine_bound);
        ctx.check("upper_bound", params + ";z=" + join(s.z), s.value - s.affine_bound, slack,
                  s.value <= s.affine_bound + slack);
    }
    if (cfg.perforation.kind == PerforationKind::none) {
        QuadratureSpec q;
        q.step = cfg.kernel_info.step;
        q.tail_tol = cfg.kernel_info.tail_tol;
        const auto m = second_moment_matrix(cfg.kernel, q);
        const double scale = m.matrix.cwiseAbs().maxCoeff();
        const double err = (h.A - m.matrix).cwiseAbs().maxCoeff() / scale;
        ctx.check("moment_consistency", params, err, cfg.consistency_tol, err <= cfg.consistency_tol);
    }
}

void run_gamma(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const double R = cfg.truncation_radius();
    const DeltaRule rule = delta_rule_from_string(cfg.gamma.delta_rule);
    FiniteCubeProblem base;
    base.n = cfg.n;
    base.perforation = cfg.perforation;
    base.kernel = cfg.kernel;
    base.R = R;
    base.periodic = cfg.gamma.periodic;
    base.options = cfg.options;

    CsvWriter w(ctx.path("gamma_convergence.csv"), {"T", "direction", "f_T", "f_0", "gap", "iterations"}, cfg.hash);
    std::vector<std::pair<std::string, FormStats>> stats;
    for (const auto& z : cfg.gamma.directions) {
        base.z = z;
        const std::string dir = join(z);
        const auto study = convergence_study(base, cfg.gamma.T_list, rule, dir, cfg.options.solver.tol);
        for (const auto& r : study.rows) {
            w.row({std::to_string(r.T), dir, format_number(r.f_T), format_number(r.f_0), format_number(r.gap),
                   std::to_string(r.iterations)});
            stats.emplace_back(fmt::format("T={};z={}", r.T, dir), r.stats);
            ctx.log << fmt::format("gamma: z={} T={} f_T={} f_0={} gap={}\n", dir, r.T, format_number(r.f_T),
                                   format_number(r.f_0), format_number(r.gap));
        }
        const std::string params = fmt::format("n={};z={};delta_rule={}", cfg.n, dir, cfg.gamma.delta_rule);
        const double last_gap = study.rows.back().gap;
        ctx.check("gap_decreasing", params, last_gap, 0.0, !study.non_decreasing);
        if (cfg.gamma.periodic) {
            double worst = 0.0;
            for (const auto& r : study.rows) worst = std::min(worst, r.gap);
            ctx.check("f_T_at_least_f_0", params, worst, cfg.options.solver.tol, !study.below_cell_value);
        }
    }
    w.close();
    write_form_stats(ctx, "gamma_form_stats.csv", stats);
}

void run_extend(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& ec = cfg.extend;
    const int d = cfg.dimension;
    const double sqrt_d = std::sqrt(static_cast<double>(d));
    const auto op = make_extension(cfg.perforation, ec.tau, cfg.n, ec.max_distortion);

    ExtensionSampling s;
    s.n = cfg.n;
    s.L = ec.L;
    s.r0 = ec.r0;
    s.r = ec.r > 0.0 ? ec.r : std::min({ec.r0, sqrt_d, ec.tau});
    s.margin = ec.margin > 0.0 ? ec.margin : sqrt_d;
    s.max_window_cells = ec.max_window_cells;

    Rng rng(cfg.seed);
    std::vector<ExtensionConstants> consts;
    {
        CsvWriter w(ctx.path("extension_constants.csv"), {"eps", "C_energy_emp", "C_L2_emp", "samples"}, cfg.hash);
        for (double eps : ec.eps) {
            consts.push_back(extension_constants(op, s, eps, ec.samples, rng));
            const auto& c = consts.back();
            w.row({format_number(eps), format_number(c.C_energy), format_number(c.C_L2), std::to_string(c.samples)});
            ctx.log << fmt::format("extend: eps={} C_energy={} C_L2={}\n", format_number(eps),
                                   format_number(c.C_energy), format_number(c.C_L2));
        }
    }
    auto spread = [&](auto member) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (const auto& c : consts) {
            lo = std::min(lo, c.*member);
            hi = std::max(hi, c.*member);
        }
        return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    };
    const std::string params = fmt::format("n={};tau={};r={};r0={};samples={}", cfg.n, format_number(ec.tau),
                                           format_number(s.r), format_number(s.r0), ec.samples);
    const double se = spread(&ExtensionConstants::C_energy), sl = spread(&ExtensionConstants::C_L2);
    ctx.check("energy_constant_spread", params, se, ec.stability_factor, se <= ec.stability_factor);
    ctx.check("l2_constant_spread", params, sl, ec.stability_factor, sl <= ec.stability_factor);

    // Identity on E and linearity on a small whole-domain grid.
    {
        const TorusGrid g = build_grid(cfg.perforation, cfg.n, 2);
        std::vector<double> u(g.size()), w(g.size()), mix(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            u[i] = rng.normal();
            w[i] = rng.normal();
            mix[i] = 2.0 * u[i] - 3.0 * w[i];
        }
        const auto vu = extend(u, g, op), vw = extend(w, g, op), vm = extend(mix, g, op);
        double id_err = 0.0, lin_err = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g.mask[i]) id_err = std::max(id_err, std::abs(vu[i] - u[i]));
            lin_err = std::max(lin_err, std::abs(vm[i] - (2.0 * vu[i] - 3.0 * vw[i])));
        }
        ctx.check("identity_on_E", params, id_err, 0.0, id_err == 0.0);
        ctx.check("linearity", params, lin_err, 1e-12, lin_err <= 1e-12);
    }

    // Localization on the outer collar at the configured resolution.
    const auto lop = make_extension(cfg.perforation, ec.tau, ec.localization_n, ec.max_distortion);
    const auto pts = collar_points(lop);
    Rng lrng(cfg.seed);
    const auto once = localization_constant(pts, d, ec.localization_r, ec.localization_samples, lrng);
    Rng lrng2(cfg.seed);
    const auto twice = localization_constant(pts, d, ec.localization_r, 2 * ec.localization_samples, lrng2, false);
    {
        CsvWriter w(ctx.path("localization.csv"), {"r", "samples", "points", "c_r_emp", "c_r_exact"}, cfg.hash);
        w.row({format_number(ec.localization_r), std::to_string(once.samples), std::to_string(once.points),
               format_number(once.c_r), format_number(once.exact)});
        w.row({format_number(ec.localization_r), std::to_string(twice.samples), std::to_string(twice.points),
               format_number(twice.c_r), format_number(once.exact)});
    }
    const double drift = std::abs(twice.c_r / once.c_r - 1.0);
    ctx.log << fmt::format("localization: r={} c_r={} (x2 samples {}) exact={}\n", format_number(ec.localization_r),
                           format_number(once.c_r), format_number(twice.c_r), format_number(once.exact));
    ctx.check("localization_stable", fmt::format("r={};n={}", format_number(ec.localization_r), ec.localization_n),
              drift, 0.2, std::isfinite(once.c_r) && drift <= 0.2);
}

void run_degenerate(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& dc = cfg.degenerate;
    if (cfg.dimension != 2) throw ConfigError("dimension", 0, "the degenerate example is planar; set dimension: 2");
    const KernelSpec kernel = KernelSpec::stripe({0.0, 0.5}, dc.delta);
    const Perforation frame = Perforation::frame(2, dc.delta);
    const double R = kernel.support_radius();

    std::vector<HomResult> results;
    CsvWriter w(ctx.path("degenerate_eigenvalues.csv"),
                {"n", "A_11", "A_12", "A_22", "lambda_min", "lambda_max", "v_min_1", "v_min_2", "components"},
                cfg.hash);
    std::vector<std::pair<std::string, FormStats>> stats;
    for (int n : dc.n_list) {
        const TorusGrid grid = build_grid(frame, n, 1);
        results.push_back(hom_without_psd_throw(grid, kernel, R, cfg.options));
        const auto& h = results.back();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h.A);
        Eigen::Vector2d v = eig.eigenvectors().col(0);
        const int k = std::abs(v(0)) >= std::abs(v(1)) ? 0 : 1;
        if (v(k) < 0.0) v = -v;
        w.row({std::to_string(n), format_number(h.A(0, 0)), format_number(h.A(0, 1)), format_number(h.A(1, 1)),
               format_number(h.eigenvalues(0)), format_number(h.eigenvalues(1)), format_number(v(0)),
               format_number(v(1)), std::to_string(h.solves[0].stats.components)});
        stats.emplace_back(fmt::format("n={}", n), h.solves[0].stats);
        ctx.log << fmt::format("degenerate: n={} A=[{} {}; {} {}] lambda_min={} direction=({}, {})\n", n,
                               format_number(h.A(0, 0)), format_number(h.A(0, 1)), format_number(h.A(1, 0)),
                               format_number(h.A(1, 1)), format_number(h.eigenvalues(0)), format_number(v(0)),
                               format_number(v(1)));
    }
    w.close();
    write_form_stats(ctx, "degenerate_form_stats.csv", stats);

    const double first = results.front().eigenvalues(0), last = results.back().eigenvalues(0);
    const std::string params =
        fmt::format("delta={};n={}->{}", format_number(dc.delta), dc.n_list.front(), dc.n_list.back());
    const double ratio = last != 0.0 ? first / last : (first > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    ctx.check("lambda_min_decrease", params, ratio, dc.decrease_factor, first > 0.0 && last * dc.decrease_factor <= first);

    const bool holds = check_lower_bound(kernel, dc.hypothesis_c, dc.hypothesis_r0, dc.hypothesis_samples);
    ctx.check("lower_bound_hypothesis_fails",
              fmt::format("c={};r0={}", format_number(dc.hypothesis_c), format_number(dc.hypothesis_r0)),
              holds ? 1.0 : 0.0, 0.0, !holds);
}

void run_kernel_info(Context& ctx) {
    const auto& cfg = ctx.cfg;
    QuadratureSpec q;
    q.step = cfg.kernel_info.step;
    q.tail_tol = cfg.kernel_info.tail_tol;
    const auto m = second_moment_matrix(cfg.kernel, q);
    const int d = cfg.dimension;
    CsvWriter w(ctx.path("kernel_info.csv"), {"i", "j", "value", "error_estimate", "tail_bound"}, cfg.hash);
    ctx.log << fmt::format("kernel {}: second-moment matrix (error <= {}, tail <= {})\n", to_string(cfg.kernel.kind),
                           format_number(m.error_estimate), format_number(m.tail_bound));
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            w.row({std::to_string(i + 1), std::to_string(j + 1), format_number(m.matrix(i, j)),
                   format_number(m.error_estimate), format_number(m.tail_bound)});
            ctx.log << ' ' << format_number(m.matrix(i, j));
        }
        ctx.log << '\n';
    }
    ctx.log << fmt::format("truncation radius: {}\n", format_number(cfg.truncation_radius()));
}

}  // namespace

RunResult run(Subcommand sub, const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
    std::filesystem::create_directories(out_dir);
    Context ctx{cfg, out_dir, log, {}};
    switch (sub) {
        case Subcommand::cell: run_cell(ctx); break;
        case Subcommand::gamma: run_gamma(ctx); break;
        case Subcommand::extend: run_extend(ctx); break;
        case Subcommand::degenerate: run_degenerate(ctx); break;
        case Subcommand::kernel_info: run_kernel_info(ctx); break;
    }
    std::string name = to_string(sub);
    std::replace(name.begin(), name.end(), '-', '_');
    CsvWriter w(ctx.path(name + "_checks.csv"), {"id", "parameters", "measured", "tolerance", "pass"}, cfg.hash);
    for (const auto& r : ctx.result.checks)
        w.row({r.id, r.parameters, format_number(r.measured), format_number(r.tolerance), r.pass ? "1" : "0"});
    return ctx.result;
}

}  // namespace nlhomog
