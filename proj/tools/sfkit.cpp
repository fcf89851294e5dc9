// sfkit: convexification toolkit CLI.
//
// Subcommands cover point-set geometry (minkowski, figure1), convex envelopes
// (envelope), relaxation certificates (solve), Shapley-Folkman decompositions
// (sf), Caratheodory reductions (caratheodory), concentration bounds
// (concentration) and constraint sampling (constraints). Every run writes a
// machine-readable manifest with per-check pass/fail lines.
//
// Exit codes: 0 all checks pass, 1 invariant violation, 2 parse/config error,
// 3 I/O error.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sfkit/caratheodory.hpp"
#include "sfkit/envelope.hpp"
#include "sfkit/geometry.hpp"
#include "sfkit/io.hpp"
#include "sfkit/relaxation.hpp"
#include "sfkit/sampling_bounds.hpp"
#include "sfkit/shapley_folkman.hpp"

namespace fs = std::filesystem;
using namespace sfkit;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunContext {
    fs::path out_dir = "sfkit_out";
    std::uint64_t seed = 0;
    bool deterministic = false;

    json manifest_config;
    std::vector<std::string> outputs;
    json checks = json::array();
    bool all_pass = true;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    void check(const std::string& name, bool pass) {
        checks.push_back({{"name", name}, {"pass", pass}});
        all_pass = all_pass && pass;
    }

    void emit(const std::string& name, const std::string& content) {
        atomic_write(out_dir / name, content);
        outputs.push_back(name);
    }

    std::string stamp() const {
        std::time_t t = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        return buf;
    }

    int finish(const std::string& command) {
        double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json man;
        man["command"] = command;
        man["version"] = kVersion;
        man["config"] = manifest_config;
        man["seed"] = seed;
        man["wall_time_s"] = deterministic ? 0.0 : wall;
        man["outputs"] = outputs;
        man["checks"] = checks;
        man["pass"] = all_pass;
        atomic_write(out_dir / "manifest.json", man.dump(2) + "\n");
        return all_pass ? 0 : 1;
    }

    void fail_manifest(const std::string& command, const std::string& error) {
        try {
            json man;
            man["command"] = command;
            man["version"] = kVersion;
            man["config"] = manifest_config;
            man["seed"] = seed;
            man["wall_time_s"] = 0.0;
            man["outputs"] = outputs;
            man["checks"] = checks;
            man["pass"] = false;
            man["error"] = error;
            atomic_write(out_dir / "manifest.json", man.dump(2) + "\n");
        } catch (...) {
        }
    }
};

std::string pointset_csv(const PointSet& ps) {
    std::vector<std::string> header;
    for (std::size_t t = 0; t < ps.dim; ++t) header.push_back("x" + std::to_string(t));
    CsvWriter csv(header);
    for (const Vec& p : ps.points) csv.row_numeric(p);
    return csv.str();
}

std::string pointset_svg(const PointSet& ps, const RunContext& ctx, bool with_hull) {
    double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300;
    for (const Vec& p : ps.points) {
        min_x = std::min(min_x, p[0]);
        max_x = std::max(max_x, p[0]);
        min_y = std::min(min_y, p[1]);
        max_y = std::max(max_y, p[1]);
    }
    double pad_x = 0.05 * (max_x - min_x + 1e-9), pad_y = 0.05 * (max_y - min_y + 1e-9);
    SvgCanvas svg(min_x - pad_x, min_y - pad_y, max_x + pad_x, max_y + pad_y);
    for (const Vec& p : ps.points) svg.circle(p, 1.2, "#1f5fbf");
    if (with_hull && ps.points.size() >= 3) {
        HullPolygon hull = convex_hull_2d(ps);
        svg.polyline(hull.vertices, "#c23b22", /*close=*/!hull.degenerate);
    }
    return svg.str(ctx.deterministic, ctx.stamp());
}

std::vector<PointSet> load_sets(const std::vector<std::string>& paths) {
    std::vector<PointSet> sets;
    for (const auto& p : paths) sets.push_back(pointset_from_json(load_json(p)));
    return sets;
}

// ---------------------------------------------------------------- minkowski

int run_minkowski(RunContext& ctx, const std::vector<std::string>& set_paths, std::size_t lhalf_n,
                  std::size_t samples, std::size_t cap, bool emit_hull, bool emit_svg) {
    std::vector<PointSet> sets;
    if (lhalf_n > 0) {
        PointSet sphere = lhalf_sphere_sample(samples);
        sets.assign(lhalf_n, sphere);
    } else {
        sets = load_sets(set_paths);
    }
    if (sets.empty()) throw std::invalid_argument("minkowski: no input sets");
    PointSet avg = minkowski_average(sets, cap, ctx.seed);
    ctx.emit("average.csv", pointset_csv(avg));
    ctx.check("cap_respected", avg.points.size() <= cap);
    if (sets.size() == 1) ctx.check("identity_on_single_set", avg.points == sets[0].points);
    if (avg.dim == 2) {
        if (emit_hull) {
            HullPolygon hull = convex_hull_2d(avg);
            PointSet hv;
            hv.dim = 2;
            hv.points = hull.vertices;
            hv.label = "hull";
            ctx.emit("hull.csv", pointset_csv(hv));
        }
        if (emit_svg) ctx.emit("average.svg", pointset_svg(avg, ctx, true));
    }
    return ctx.finish("minkowski");
}

// ---------------------------------------------------------------- envelope

int run_envelope(RunContext& ctx, const std::string& in, std::size_t rho_k_max,
                 const std::string& out_name) {
    SampledFunction f = sampled_function_from_json(load_json(in));
    ConvexEnvelope env = biconjugate(f);

    std::vector<std::string> header;
    for (std::size_t t = 0; t < f.dim; ++t) header.push_back("x" + std::to_string(t));
    header.push_back("f");
    header.push_back("envelope");
    CsvWriter csv(header);
    for (std::size_t i = 0; i < f.size(); ++i) {
        Vec row = f.grid[i];
        row.push_back(f.values[i]);
        row.push_back(env.grid_values[i]);
        csv.row_numeric(row);
    }
    ctx.emit(out_name, csv.str());

    std::vector<std::size_t> ks;
    for (std::size_t k = 1; k <= rho_k_max; ++k) ks.push_back(k);
    NonconvexityReport rep = nonconvexity_report(f, ks);
    json rj;
    rj["rho"] = rep.rho;
    rj["argmax"] = to_json(rep.argmax);
    json rk;
    for (auto& [k, v] : rep.rho_k) rk[std::to_string(k)] = v;
    rj["rho_k"] = rk;
    ctx.emit("nonconvexity.json", rj.dump(2) + "\n");

    bool below = true;
    for (std::size_t i = 0; i < f.size(); ++i)
        below = below && env.grid_values[i] <= f.values[i] + 1e-9;
    ctx.check("envelope_below_f", below);
    ctx.check("rho_1_is_zero", rep.rho_k.empty() || rep.rho_k.begin()->second == 0.0);
    bool monotone = true;
    double prev = 0.0;
    for (auto& [k, v] : rep.rho_k) {
        monotone = monotone && v >= prev - 1e-12;
        prev = v;
    }
    ctx.check("rho_k_nondecreasing", monotone);
    return ctx.finish("envelope");
}

// ---------------------------------------------------------------- solve

int run_solve(RunContext& ctx, const std::string& in, const std::string& cert_kind, double gamma) {
    SeparableProblem p = problem_from_json(load_json(in));
    RelaxationSolution sol = solve_relaxation(p);
    PurifyResult pur = purify(sol, p);

    json cj;
    cj["lower"] = sol.value;
    cj["upper"] = pur.upper;
    cj["upper_feasible"] = pur.feasible;
    cj["x_star"] = to_json(sol.x_star);
    cj["x_hat"] = to_json(pur.x_hat);
    cj["dual_lambda"] = to_json(sol.dual_lambda);
    cj["active_rows"] = sol.active_set;
    cj["mixed_blocks"] = sol.mixed_blocks();

    double basic = gap_bound_basic(p, sol);
    cj["bound_basic"] = basic;
    cj["bound_basic_full_m"] = gap_bound_basic(p, sol, false);
    double refined = basic;
    double approx = std::numeric_limits<double>::quiet_NaN();
    if (cert_kind == "refined" || cert_kind == "approx") {
        RefinedBound rb = gap_bound_refined(p, sol);
        refined = rb.value;
        cj["bound_refined"] = rb.value;
        cj["refined_exact"] = rb.rho_k_exact;
        ctx.check("refined_le_basic", rb.value <= basic + 1e-9);
    }
    if (cert_kind == "approx") {
        GapCertificate cert = gap_bound_approx(p, sol, gamma, ctx.seed);
        approx = cert.bound_approx;
        cj["bound_approx"] = cert.bound_approx;
        cj["u1"] = cert.u1;
        cj["u2"] = to_json(cert.u2);
        cj["u_bound"] = cert.u_bound;
        cj["gamma"] = gamma;
        cj["s_budget"] = cert.s_budget;
        cj["s_used"] = cert.s_used;
        cj["R_v"] = cert.R_v;
        cj["R_lambda"] = cert.R_lambda;
        cj["M_V"] = cert.M_V;
        cj["bound_violated"] = cert.bound_violated;
        ctx.check("u_within_bound", !cert.bound_violated);
    }
    ctx.emit("certificate.json", cj.dump(2) + "\n");

    CsvWriter csv({"lower", "upper", "feasible", "active_rows", "bound_basic", "bound_refined",
                   "bound_approx"});
    csv.row({fmt_double(sol.value), fmt_double(pur.upper), pur.feasible ? "1" : "0",
             std::to_string(sol.active_count()), fmt_double(basic), fmt_double(refined),
             std::isnan(approx) ? "" : fmt_double(approx)});
    ctx.emit("summary.csv", csv.str());

    if (pur.feasible) ctx.check("lower_le_upper", sol.value <= pur.upper + 1e-9);
    ctx.check("duals_certify_lower",
              std::abs(dual_value(p, sol.dual_lambda) - sol.value) <=
                  1e-6 * (1 + std::abs(sol.value)));
    return ctx.finish("solve");
}

// ---------------------------------------------------------------- sf

int run_sf(RunContext& ctx, const std::string& family_path, bool approx, double eps) {
    BlockFamily fam = family_from_json(load_json(family_path));
    Vec x = fam.represented_point();
    json out;
    if (!approx) {
        SFDecomposition dec = sf_decompose(fam);
        out["mixed_set"] = dec.mixed_set;
        json blocks = json::array();
        for (const auto& b : dec.blocks)
            blocks.push_back({{"atoms", b.atom_indices}, {"weights", to_json(b.weights)}});
        out["blocks"] = blocks;
        out["x"] = to_json(dec.x);
        double err = dist2(dec.x, x);
        out["reconstruction_error"] = err;
        ctx.check("mixed_at_most_d", dec.mixed_set.size() <= fam.dim);
        ctx.check("reconstruction_exact", err <= 1e-8 * (1.0 + norm2(x)));
    } else {
        ApproxSFResult r = approx_sf_decompose(fam, eps, 0.0, 0.0, NormSpec::l2(), ctx.seed);
        out["q"] = r.q;
        out["S"] = r.S;
        out["T"] = r.T;
        out["x_hat"] = to_json(r.x_hat);
        out["errors"] = {{"value", r.err_value},
                         {"weight_total", r.err_weight_total},
                         {"weight_l2", r.err_weight_l2}};
        out["bounds"] = {{"value", r.bound_value},
                         {"weight_total", r.bound_weight_total},
                         {"weight_l2", r.bound_weight_l2}};
        out["beta"] = r.beta;
        out["gamma"] = r.gamma;
        out["attempts"] = r.attempts;
        out["bound_violated"] = r.bound_violated;
        ctx.check("q_at_most_d", r.q <= fam.dim);
        ctx.check("errors_within_bounds", !r.bound_violated);
    }
    ctx.emit("decomposition.json", out.dump(2) + "\n");
    return ctx.finish("sf");
}

// ---------------------------------------------------------------- caratheodory

int run_caratheodory(RunContext& ctx, const std::string& mode, const std::string& atoms_path,
                     const std::string& weights_path, double eps) {
    PointSet ps = pointset_from_json(load_json(atoms_path));
    const std::size_t D = ps.dim, N = ps.points.size();
    Mat atoms(D, N);
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t r = 0; r < D; ++r) atoms(r, j) = ps.points[j][r];
    Vec w = vec_from_json(load_json(weights_path).at("weights"));
    if (w.size() != N) throw std::invalid_argument("caratheodory: weights/atoms size mismatch");

    Vec target(D, 0.0);
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t r = 0; r < D; ++r) target[r] += w[j] * atoms(r, j);

    json out;
    if (mode == "exact") {
        double s = 0.0;
        for (double v : w) s += v;
        bool convex = std::abs(s - 1.0) <= 1e-10;
        ConicCombination c = convex ? reduce_convex(atoms, w) : reduce_conic(atoms, w);
        Vec back = c.reconstruct(atoms);
        double err = dist2(back, target);
        out["indices"] = c.atom_indices;
        out["weights"] = to_json(c.weights);
        out["error"] = err;
        out["m"] = c.support();
        ctx.check("support_bound", c.support() <= (convex ? D + 1 : D));
        ctx.check("reconstruction_exact", err <= 1e-8 * (1.0 + norm2(target)));
    } else if (mode == "fw") {
        FwResult r = fw_approx(target, atoms, eps, NormSpec::lp(2));
        out["indices"] = r.comb.atom_indices;
        out["weights"] = to_json(r.comb.weights);
        out["error"] = r.error;
        out["m"] = r.comb.support();
        out["budget"] = r.budget;
        ctx.check("error_within_eps", r.error <= eps);
        ctx.check("support_within_budget", r.comb.support() <= r.budget);
    } else {
        PlanInputs in;
        in.N = N;
        in.dim = D;
        in.epsilon = eps;
        for (std::size_t j = 0; j < N; ++j) {
            in.R_v = std::max(in.R_v, std::abs(w[j]) * norm_inf(atoms.col(j)));
            in.R_lambda = std::max(in.R_lambda, std::abs(w[j]));
        }
        SamplingPlan plan = required_sample_size(in, SamplingPlan::Variant::Linf);
        SampleResult r = sample_without_replacement(atoms, w, plan, NormSpec::linf(), ctx.seed);
        out["indices"] = r.comb.atom_indices;
        out["weights"] = to_json(r.comb.weights);
        out["error"] = r.value_error;
        out["weight_error"] = r.weight_error;
        out["m"] = plan.m;
        out["attempts"] = r.attempts;
        ctx.check("errors_within_eps", r.ok);
    }
    ctx.emit("result.json", out.dump(2) + "\n");
    return ctx.finish("caratheodory");
}

// ---------------------------------------------------------------- concentration

int run_concentration(RunContext& ctx, const std::string& pop_path, std::size_t m, double eps,
                      std::size_t trials) {
    PointSet ps = pointset_from_json(load_json(pop_path));
    const std::size_t N = ps.points.size();
    if (m < 1 || m > N) throw std::invalid_argument("concentration: need 1 <= m <= N");
    NormSpec norm = NormSpec::l2();
    double Rmax = 0.0;
    for (const Vec& v : ps.points) Rmax = std::max(Rmax, norm(v));

    SigmaResult sig;
    if (N <= 10 && m <= N - 1) {
        sig = sigma_m(ps.points, m, norm);
    } else {
        SigmaMode mc;
        mc.exact = false;
        mc.trials = 20000;
        mc.seed = ctx.seed;
        sig = sigma_m(ps.points, std::min(m, N - 1), norm, mc);
    }

    TailBoundParams hp;
    hp.N = N;
    hp.m = m;
    hp.epsilon = eps;
    hp.R_v = Rmax / static_cast<double>(N);
    hp.R_lambda = 1.0 / static_cast<double>(N);
    double bound_hs = hoeffding_serfling_tail(hp);

    TailBoundParams bp;
    bp.N = N;
    bp.m = m;
    bp.epsilon = eps;
    bp.R_v = Rmax;
    bp.sigma_m = sig.value;
    bp.D_smooth = norm.smoothness_D();
    double bound_bs = bennett_serfling_tail(bp);

    double freq = empirical_tail(ps.points, m, eps, norm, trials, ctx.seed);
    double se = std::sqrt(std::max(freq * (1.0 - freq), 1e-4) / static_cast<double>(trials));

    CsvWriter csv(
        {"N", "m", "eps", "bound_hs", "bound_bs", "empirical", "sigma_m", "sigma_m_exact"});
    csv.row({std::to_string(N), std::to_string(m), fmt_double(eps), fmt_double(bound_hs),
             fmt_double(bound_bs), fmt_double(freq), fmt_double(sig.value),
             sig.exact ? "1" : "0"});
    ctx.emit("concentration.csv", csv.str());

    ctx.check("empirical_le_hs", freq <= bound_hs + 3.0 * se);
    ctx.check("empirical_le_bs", freq <= bound_bs + 3.0 * se);
    return ctx.finish("concentration");
}

// ---------------------------------------------------------------- constraints

int run_constraints(RunContext& ctx, const std::string& lp_path, std::size_t k,
                    std::size_t trials) {
    SampledLpInstance inst = lp_instance_from_json(load_json(lp_path));
    ConstraintSamplingReport rep = constraint_sampling_experiment(inst, k, trials, ctx.seed);
    CsvWriter csv({"n", "k", "f0_star", "bound", "min_slack", "max_slack", "D_diam", "factor",
                   "subsets", "unbounded", "vacuous"});
    csv.row({std::to_string(inst.n_constraints()), std::to_string(k), fmt_double(rep.f0_star),
             fmt_double(rep.bound), fmt_double(rep.min_slack), fmt_double(rep.max_slack),
             fmt_double(rep.D_diam), fmt_double(rep.factor), std::to_string(rep.subsets_solved),
             std::to_string(rep.unbounded_subsets), rep.vacuous ? "1" : "0"});
    ctx.emit("constraints.csv", csv.str());
    ctx.check("theorem_holds", rep.theorem_holds);
    return ctx.finish("constraints");
}

// ---------------------------------------------------------------- figure1

int run_figure1(RunContext& ctx, std::vector<std::size_t> n_list, std::size_t samples,
                std::size_t cap, const std::vector<std::string>& set_paths) {
    if (!set_paths.empty()) {
        std::vector<PointSet> sets = load_sets(set_paths);
        PointSet avg = minkowski_average(sets, cap, ctx.seed);
        ctx.emit("average.csv", pointset_csv(avg));
        if (avg.dim == 2) ctx.emit("average.svg", pointset_svg(avg, ctx, true));
        ctx.check("nonempty", !avg.points.empty());
        return ctx.finish("figure1");
    }
    if (n_list.empty()) throw std::invalid_argument("figure1: empty n list");
    PointSet sphere = lhalf_sphere_sample(samples);
    PointSet ball = l1_ball_sample(81);
    CsvWriter csv({"n", "d_H"});
    double prev = std::numeric_limits<double>::infinity();
    bool nonincreasing = true;
    for (std::size_t n : n_list) {
        std::vector<PointSet> copies(n, sphere);
        PointSet avg = minkowski_average(copies, cap, ctx.seed);
        double dh = hausdorff_distance(avg, ball);
        csv.row({std::to_string(n), fmt_double(dh)});
        nonincreasing = nonincreasing && dh <= prev + 1e-12;
        prev = dh;
        ctx.emit("average_n" + std::to_string(n) + ".svg", pointset_svg(avg, ctx, true));
    }
    ctx.emit("dh.csv", csv.str());
    ctx.check("dh_nonincreasing", nonincreasing);
    return ctx.finish("figure1");
}

std::vector<std::size_t> parse_n_list(const std::string& s) {
    std::vector<std::size_t> out;
    std::string cur;
    for (char c : s + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(std::stoul(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sfkit: Shapley-Folkman convexification toolkit"};
    app.set_version_flag("--version", std::string("sfkit ") + kVersion);
    app.require_subcommand(1);

    RunContext ctx;
    if (const char* env = std::getenv("SFKIT_SEED")) ctx.seed = std::strtoull(env, nullptr, 10);
    std::string out_dir = "sfkit_out";
    app.add_option("--out-dir", out_dir, "output directory (created if missing)")
        ->capture_default_str();
    app.add_option("--seed", ctx.seed, "RNG seed (overrides SFKIT_SEED)")->capture_default_str();
    app.add_flag("--deterministic", ctx.deterministic,
                 "suppress timestamps so reruns are byte-identical");

    auto* mink = app.add_subcommand("minkowski", "Minkowski average of point sets");
    std::vector<std::string> mink_sets;
    std::size_t mink_lhalf = 0, mink_samples = 256, mink_cap = 4096;
    bool mink_hull = false, mink_svg = false;
    mink->add_option("--sets", mink_sets, "input PointSet JSON files");
    mink->add_option("--lhalf", mink_lhalf, "average n copies of the l_1/2 sphere sample");
    mink->add_option("--samples", mink_samples, "sphere sample count")->capture_default_str();
    mink->add_option("--cap", mink_cap, "output cardinality cap")->capture_default_str();
    mink->add_flag("--hull", mink_hull, "emit hull.csv");
    mink->add_flag("--svg", mink_svg, "emit average.svg (dim 2)");

    auto* env = app.add_subcommand("envelope", "convex envelope and nonconvexity measures");
    std::string env_in, env_out = "envelope.csv";
    std::size_t env_rho_k = 3;
    env->add_option("--in", env_in, "SampledFunction JSON")->required();
    env->add_option("--out", env_out, "envelope CSV filename (inside --out-dir)")
        ->capture_default_str();
    env->add_option("--rho-k", env_rho_k, "report rho_k for k = 1..K")->capture_default_str();

    auto* solve = app.add_subcommand("solve", "solve the relaxation and emit a gap certificate");
    std::string solve_in, solve_cert = "basic";
    double solve_gamma = 0.5;
    solve->add_option("--in", solve_in, "SeparableProblem JSON")->required();
    solve->add_option("--cert", solve_cert, "certificate kind: basic|refined|approx")
        ->check(CLI::IsMember({"basic", "refined", "approx"}))
        ->capture_default_str();
    solve->add_option("--gamma", solve_gamma, "approximation level for --cert approx")
        ->capture_default_str();

    auto* sf = app.add_subcommand("sf", "Shapley-Folkman decomposition of a block family");
    std::string sf_family;
    bool sf_approx = false;
    double sf_eps = 0.5;
    sf->add_option("--family", sf_family, "BlockFamily JSON")->required();
    sf->add_flag("--approx", sf_approx, "sampled approximate decomposition");
    sf->add_option("--eps", sf_eps, "approximation level")->capture_default_str();

    auto* cara = app.add_subcommand("caratheodory", "exact and approximate reductions");
    std::string cara_mode = "exact", cara_atoms, cara_weights;
    double cara_eps = 0.3;
    cara->add_option("--mode", cara_mode, "exact|fw|sample")
        ->check(CLI::IsMember({"exact", "fw", "sample"}))
        ->capture_default_str();
    cara->add_option("--atoms", cara_atoms, "PointSet JSON of atoms (columns)")->required();
    cara->add_option("--weights", cara_weights, "JSON {\"weights\": [...]}")->required();
    cara->add_option("--eps", cara_eps, "target accuracy")->capture_default_str();

    auto* conc = app.add_subcommand("concentration", "tail bounds vs empirical frequencies");
    std::string conc_pop;
    std::size_t conc_m = 0, conc_trials = 10000;
    double conc_eps = 0.1;
    conc->add_option("--pop", conc_pop, "population PointSet JSON")->required();
    conc->add_option("--m", conc_m, "sample size")->required();
    conc->add_option("--eps", conc_eps, "deviation level")->capture_default_str();
    conc->add_option("--trials", conc_trials, "Monte-Carlo trials")->capture_default_str();

    auto* cons = app.add_subcommand("constraints", "constraint-sampling experiment");
    std::string cons_lp;
    std::size_t cons_k = 0, cons_trials = 0;
    cons->add_option("--lp", cons_lp, "LP instance JSON")->required();
    cons->add_option("--k", cons_k, "subset size")->required();
    cons->add_option("--trials", cons_trials, "random subsets (0 = exhaustive)")
        ->capture_default_str();

    auto* fig = app.add_subcommand("figure1", "l_1/2 Minkowski averaging panels");
    std::string fig_nlist = "1,2,4,10";
    std::size_t fig_samples = 256, fig_cap = 4096;
    std::vector<std::string> fig_sets;
    fig->add_option("--n-list", fig_nlist, "comma-separated copy counts")->capture_default_str();
    fig->add_option("--samples", fig_samples, "sphere sample count")->capture_default_str();
    fig->add_option("--cap", fig_cap, "average cardinality cap")->capture_default_str();
    fig->add_option("--sets", fig_sets, "average these PointSet JSONs instead");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    ctx.out_dir = out_dir;
    std::string command = "?";
    try {
        json cfg;
        for (const auto* opt : app.get_options())
            if (opt->count() > 0 && !opt->get_name().empty())
                cfg[opt->get_name()] = opt->as<std::string>();
        ctx.manifest_config = cfg;
        if (app.got_subcommand(mink)) {
            command = "minkowski";
            return run_minkowski(ctx, mink_sets, mink_lhalf, mink_samples, mink_cap, mink_hull,
                                 mink_svg);
        }
        if (app.got_subcommand(env)) {
            command = "envelope";
            return run_envelope(ctx, env_in, env_rho_k, env_out);
        }
        if (app.got_subcommand(solve)) {
            command = "solve";
            return run_solve(ctx, solve_in, solve_cert, solve_gamma);
        }
        if (app.got_subcommand(sf)) {
            command = "sf";
            return run_sf(ctx, sf_family, sf_approx, sf_eps);
        }
        if (app.got_subcommand(cara)) {
            command = "caratheodory";
            return run_caratheodory(ctx, cara_mode, cara_atoms, cara_weights, cara_eps);
        }
        if (app.got_subcommand(conc)) {
            command = "concentration";
            return run_concentration(ctx, conc_pop, conc_m, conc_eps, conc_trials);
        }
        if (app.got_subcommand(cons)) {
            command = "constraints";
            return run_constraints(ctx, cons_lp, cons_k, cons_trials);
        }
        if (app.got_subcommand(fig)) {
            command = "figure1";
            return run_figure1(ctx, parse_n_list(fig_nlist), fig_samples, fig_cap, fig_sets);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        ctx.fail_manifest(command, e.what());
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        ctx.fail_manifest(command, e.what());
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        ctx.fail_manifest(command, e.what());
        return 3;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        ctx.fail_manifest(command, e.what());
        return 1;
    }
    return 2;
}
