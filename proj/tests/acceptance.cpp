// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. The last criterion (byte-identical reruns) exercises the CLI
// binary whose path arrives as argv[1].

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sfkit/caratheodory.hpp"
#include "sfkit/envelope.hpp"
#include "sfkit/geometry.hpp"
#include "sfkit/relaxation.hpp"
#include "sfkit/rng.hpp"
#include "sfkit/sampling_bounds.hpp"
#include "sfkit/shapley_folkman.hpp"

using namespace sfkit;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %s — %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ------------------------------------------------------------------ shared

BlockFamily random_family(Rng& rng, std::size_t d, std::size_t n, std::size_t max_atoms) {
    BlockFamily fam;
    fam.dim = d;
    for (std::size_t i = 0; i < n; ++i) {
        PointSet ps;
        ps.dim = d;
        std::size_t k = 1 + rng.below(max_atoms);
        for (std::size_t j = 0; j < k; ++j) {
            Vec p(d);
            for (double& v : p) v = rng.uniform(-1, 1);
            ps.points.push_back(std::move(p));
        }
        fam.blocks.push_back(std::move(ps));
        fam.weights.push_back(rng.simplex(k));
    }
    return fam;
}

SeparableProblem random_problem(Rng& rng, std::size_t max_n, std::size_t max_m,
                                std::size_t max_grid) {
    SeparableProblem p;
    std::size_t n = 1 + rng.below(max_n);
    std::size_t m = 1 + rng.below(max_m);
    Vec xbar;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t T = 2 + rng.below(max_grid - 1);
        Vec xs, vs;
        double x = rng.uniform(-1.5, -0.5);
        for (std::size_t j = 0; j < T; ++j) {
            xs.push_back(x);
            x += rng.uniform(0.2, 0.8);
            vs.push_back(rng.uniform(-1, 1));
        }
        p.blocks.push_back(SampledFunction::line_1d(xs, vs));
        xbar.push_back(p.blocks.back().grid[rng.below(T)][0]);
    }
    p.A = Mat(m, n);
    for (double& v : p.A.data) v = rng.uniform(-1, 1);
    Vec Ax = p.A.mul(xbar);
    p.b.resize(m);
    for (std::size_t r = 0; r < m; ++r) p.b[r] = Ax[r] + std::abs(rng.gaussian()) * 0.3;
    return p;
}

// ------------------------------------------------------- criterion 1: SF

void criterion_sf_exactness() {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(20260809);
    std::size_t bad = 0;
    const std::size_t trials = 10000;
    for (std::size_t t = 0; t < trials; ++t) {
        std::size_t d = 1 + rng.below(5);
        std::size_t n = 1 + rng.below(50);
        BlockFamily fam = random_family(rng, d, n, 6);
        Vec x = fam.represented_point();
        SFDecomposition dec;
        try {
            dec = sf_decompose(fam);
        } catch (const std::runtime_error&) {
            ++bad;
            continue;
        }
        if (dec.mixed_set.size() > d) ++bad;
        if (dist2(dec.x, x) > 1e-8 * (1.0 + norm2(x))) ++bad;
    }
    double secs = seconds_since(t0);
    std::ostringstream d;
    d << trials << " instances, " << bad << " violations, " << secs << " s";
    report("shapley-folkman-exactness", bad == 0 && secs < 60.0, d.str());
}

// ------------------------------------------------ criterion 2: Caratheodory

void criterion_caratheodory_exactness() {
    Rng rng(31337);
    std::size_t bad = 0;
    const std::size_t trials = 10000;
    for (std::size_t t = 0; t < trials; ++t) {
        std::size_t D = 1 + rng.below(6);
        std::size_t N = 1 + rng.below(40);
        Mat atoms(D, N);
        for (double& v : atoms.data) v = rng.uniform(-1, 1);
        bool convex = (t % 2) == 0;
        Vec w(N);
        if (convex) {
            w = rng.simplex(N);
        } else {
            for (double& v : w) v = rng.unit() < 0.25 ? 0.0 : rng.uniform(0, 2);
        }
        Vec target(D, 0.0);
        for (std::size_t j = 0; j < N; ++j)
            for (std::size_t r = 0; r < D; ++r) target[r] += w[j] * atoms(r, j);
        try {
            ConicCombination c = convex ? reduce_convex(atoms, w) : reduce_conic(atoms, w);
            if (c.support() > (convex ? D + 1 : D)) ++bad;
            if (dist2(c.reconstruct(atoms), target) > 1e-8 * (1.0 + norm2(target))) ++bad;
            if (convex && std::abs(c.weight_sum() - 1.0) > 1e-10) ++bad;
        } catch (const std::runtime_error&) {
            ++bad;
        }
    }
    std::ostringstream d;
    d << trials << " reductions, " << bad << " violations";
    report("caratheodory-exactness", bad == 0, d.str());
}

// ------------------------------------------------ criterion 3: gap sandwich

void criterion_gap_sandwich() {
    Rng rng(424242);
    std::size_t bad = 0, solved = 0;
    const std::size_t want = 1000;
    while (solved < want) {
        SeparableProblem p = random_problem(rng, 10, 3, 4);
        RelaxationSolution sol;
        try {
            sol = solve_relaxation(p);
        } catch (const std::runtime_error&) {
            continue;
        }
        ++solved;
        double brute = perturbed_value(p, Vec(p.num_rows(), 0.0), false, PrimalDomain::Interp);
        double basic = gap_bound_basic(p, sol);
        double refined = gap_bound_refined(p, sol).value;
        bool ok = std::isfinite(brute);
        ok = ok && sol.value <= brute + 1e-6;
        ok = ok && brute <= sol.value + basic + 1e-6;
        ok = ok && brute <= sol.value + refined + 1e-6;
        ok = ok && refined <= basic + 1e-9;
        if (!ok) ++bad;
    }
    std::ostringstream d;
    d << solved << " instances, " << bad << " violations";
    report("gap-sandwich", bad == 0, d.str());
}

// ------------------------------- criterion 4: approximate certificate

void criterion_approx_certificate() {
    // (a) gamma -> 0 coincides with the refined bound at budget n + m~ + 1
    Rng rng(777);
    std::size_t bad_limit = 0, solved = 0;
    std::vector<SeparableProblem> instances;
    while (solved < 100) {
        SeparableProblem p = random_problem(rng, 10, 3, 4);
        RelaxationSolution sol;
        try {
            sol = solve_relaxation(p);
        } catch (const std::runtime_error&) {
            continue;
        }
        ++solved;
        instances.push_back(p);
        GapCertificate cert = gap_bound_approx(p, sol, 1e-9, 97 + solved);
        double refined = gap_bound_refined(p, sol).value;
        if (std::abs(cert.bound_approx - refined) > 1e-8) ++bad_limit;
    }

    // (b) finite-gamma perturbed sandwich on every brute-forceable instance
    std::size_t bad_sandwich = 0, checked = 0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const SeparableProblem& p = instances[i];
        RelaxationSolution sol = solve_relaxation(p);
        GapCertificate cert = gap_bound_approx(p, sol, 0.5, 1234 + i);
        Vec u(p.num_rows(), 0.0);
        for (std::size_t r = 0; r < sol.active_set.size(); ++r)
            u[sol.active_set[r]] = cert.u2[r];
        double hCoP_u = perturbed_value(p, u, true);
        double hP_u;
        try {
            hP_u = perturbed_value(p, u, false, PrimalDomain::Interp);
        } catch (const std::runtime_error&) {
            continue;  // enumeration budget: not brute-forceable
        }
        ++checked;
        bool ok = hCoP_u <= hP_u + 1e-8;
        ok = ok && std::isfinite(hP_u);
        ok = ok && hP_u <= sol.value + cert.bound_approx + 1e-6;
        if (!ok) ++bad_sandwich;
    }

    // (c) the u-magnitude bound holds within the retry budget on >= 99% of runs
    std::size_t ok_runs = 0;
    const std::size_t runs = 1000;
    for (std::size_t r = 0; r < runs; ++r) {
        const SeparableProblem& p = instances[r % instances.size()];
        RelaxationSolution sol = solve_relaxation(p);
        GapCertificate cert = gap_bound_approx(p, sol, 0.5, 50000 + 7919 * r);
        if (!cert.bound_violated &&
            std::max(std::abs(cert.u1), norm2(cert.u2)) <= cert.u_bound + 1e-9)
            ++ok_runs;
    }

    std::ostringstream d;
    d << "limit: " << bad_limit << "/100 off, sandwich: " << bad_sandwich << "/" << checked
      << " violations, u-bound: " << ok_runs << "/" << runs;
    report("approx-certificate-consistency",
           bad_limit == 0 && bad_sandwich == 0 && checked >= 90 &&
               ok_runs >= static_cast<std::size_t>(0.99 * runs),
           d.str());
}

// ------------------------------------------------ criterion 5: envelope rho

void criterion_envelope_value() {
    Vec xs, vs;
    for (int k = 0; k < 201; ++k) {
        double x = -1.0 + 0.01 * k;
        xs.push_back(x);
        vs.push_back(std::sqrt(std::abs(x)));
    }
    SampledFunction f = SampledFunction::line_1d(xs, vs);
    double r = rho(f);
    bool ok = std::abs(r - 0.25) <= 0.01;

    Rng rng(5);
    bool zero_ok = true;
    for (int trial = 0; trial < 20; ++trial) {
        Vec gx, gv;
        double a = rng.uniform(0.2, 3.0), b = rng.uniform(-2, 2), c = rng.uniform(-1, 1);
        double x = -2;
        for (int i = 0; i < 50; ++i) {
            gx.push_back(x);
            gv.push_back(a * x * x + b * x + c);
            x += rng.uniform(0.02, 0.2);
        }
        zero_ok = zero_ok && rho(SampledFunction::line_1d(gx, gv)) == 0.0;
    }
    std::ostringstream d;
    d << "rho(sqrt|x|) = " << r << ", convex-sample rho == 0: " << (zero_ok ? "yes" : "no");
    report("envelope-rho-value", ok && zero_ok, d.str());
}

// ------------------------------------------------ criterion 6: figure 1

void criterion_figure1() {
    auto t0 = std::chrono::steady_clock::now();
    PointSet sphere = lhalf_sphere_sample(256);
    PointSet ball = l1_ball_sample(81);
    std::vector<std::size_t> ns = {1, 2, 4, 10};
    Vec dh;
    for (std::size_t n : ns) {
        std::vector<PointSet> copies(n, sphere);
        dh.push_back(hausdorff_distance(minkowski_average(copies, 4096, 0), ball));
    }
    double secs = seconds_since(t0);
    bool decreasing = dh[0] > dh[1] && dh[1] > dh[2] && dh[2] > dh[3];
    bool halved = dh[3] < dh[0] / 2.0;
    std::ostringstream d;
    d << "d_H = [" << dh[0] << ", " << dh[1] << ", " << dh[2] << ", " << dh[3] << "], " << secs
      << " s";
    report("figure1-hausdorff-decay", decreasing && halved && secs < 10.0, d.str());
}

// ------------------------------------------- criterion 7: concentration

void criterion_concentration() {
    Rng rng(1912);
    std::size_t bad = 0, comparisons = 0;
    const std::size_t trials = 10000;
    for (int pop_i = 0; pop_i < 50; ++pop_i) {
        std::size_t N = 20 + rng.below(181);
        std::vector<Vec> pop;
        double scale = rng.uniform(0.3, 1.0);
        for (std::size_t i = 0; i < N; ++i) pop.push_back({rng.uniform(-scale, scale)});
        std::size_t m = std::max<std::size_t>(2, N / 2 + rng.below(N / 3));
        m = std::min(m, N - 1);
        double Rmax = 0.0;
        for (const Vec& v : pop) Rmax = std::max(Rmax, std::abs(v[0]));
        SigmaMode mc;
        mc.exact = false;
        mc.trials = 3000;
        mc.seed = 51 + pop_i;
        double sig = sigma_m(pop, m, NormSpec::l2(), mc).value;
        for (double eps : {0.05, 0.1, 0.2}) {
            double freq = empirical_tail(pop, m, eps, NormSpec::l2(), trials, 900 + pop_i);
            double se = std::sqrt(std::max(freq * (1.0 - freq), 1e-4) / trials);
            TailBoundParams hp;
            hp.N = N;
            hp.m = m;
            hp.epsilon = eps;
            hp.R_v = Rmax / static_cast<double>(N);
            hp.R_lambda = 1.0 / static_cast<double>(N);
            TailBoundParams bp;
            bp.N = N;
            bp.m = m;
            bp.epsilon = eps;
            bp.R_v = Rmax;
            bp.sigma_m = sig;
            ++comparisons;
            if (freq > hoeffding_serfling_tail(hp) + 3 * se) ++bad;
            if (freq > bennett_serfling_tail(bp) + 3 * se) ++bad;
        }
    }

    std::size_t rt_bad = 0, rt_done = 0;
    while (rt_done < 1000) {
        TailBoundParams p;
        p.N = 20 + rng.below(400);
        p.R_v = rng.uniform(0.05, 1.0);
        p.sigma_m = rng.uniform(0.0, 0.5);
        p.delta0 = rng.uniform(0.01, 0.5);
        double eps_min =
            2.0 * std::log(2.0 / p.delta0) * p.R_v / (3.0 * static_cast<double>(p.N));
        p.epsilon = eps_min * rng.uniform(1.05, 20.0);
        RatioResult r = required_sampling_ratio(p);
        if (!r.feasible) continue;
        ++rt_done;
        TailBoundParams q = p;
        q.m = r.m_implied;
        if (bennett_serfling_tail(q) > p.delta0 + 1e-12) ++rt_bad;
    }
    std::ostringstream d;
    d << comparisons << " bound comparisons, " << bad << " violations; round-trip " << rt_bad
      << "/1000 over delta0";
    report("concentration-soundness", bad == 0 && rt_bad == 0, d.str());
}

// ----------------------------------------- criterion 8: constraint sampling

void criterion_constraint_sampling() {
    Rng rng(606);
    std::size_t bad = 0, lps = 0;
    for (int t = 0; t < 20; ++t) {
        const std::size_t d = 3, n = 40;
        SampledLpInstance inst;
        Vec anchor(d), x0(d);
        for (double& v : anchor) v = rng.uniform(-0.3, 0.3);
        for (std::size_t j = 0; j < d; ++j) x0[j] = anchor[j] + rng.uniform(-1.0, 1.0);
        inst.obj_C = Mat(2 * d, d);
        inst.obj_d = Vec(2 * d);
        for (std::size_t j = 0; j < d; ++j) {
            inst.obj_C(2 * j, j) = 1.0;
            inst.obj_d[2 * j] = -x0[j];
            inst.obj_C(2 * j + 1, j) = -1.0;
            inst.obj_d[2 * j + 1] = x0[j];
        }
        inst.A = Mat(n, d);
        inst.b = Vec(n);
        for (std::size_t r = 0; r < n; ++r) {
            Vec a(d);
            for (double& v : a) v = rng.gaussian();
            double nn = norm2(a);
            for (std::size_t j = 0; j < d; ++j) inst.A(r, j) = a[j] / nn;
            inst.b[r] = dot(inst.A.row(r), anchor) + rng.uniform(0.05, 0.8);
        }
        ++lps;
        for (std::size_t k : {2, 3, 4}) {
            ConstraintSamplingReport rep = constraint_sampling_experiment(inst, k, 0, 1);
            if (!std::isfinite(rep.D_diam)) {
                ++bad;
                continue;
            }
            if (rep.min_slack > rep.bound + 1e-7 * (1.0 + std::abs(rep.bound))) ++bad;
            if (k == 4) {  // k = m = min(n, d+1): the factor vanishes
                if (rep.bound != 0.0) ++bad;
                if (rep.min_slack > 1e-7) ++bad;
            }
        }
    }
    std::ostringstream d;
    d << lps << " LPs x k in {2,3,4} exhaustive, " << bad << " violations";
    report("constraint-sampling", bad == 0, d.str());
}

// ------------------------------------------------ criterion 9: determinism

std::map<std::string, std::string> slurp_dir(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        files[fs::relative(e.path(), dir).string()] =
            std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }
    return files;
}

void criterion_determinism(const std::string& sfkit_path) {
    if (sfkit_path.empty()) {
        report("determinism-byte-identical", false, "no sfkit binary path given");
        return;
    }
    fs::path work = fs::temp_directory_path() / "sfkit_acceptance_det";
    fs::remove_all(work);
    fs::create_directories(work);
    {
        std::ofstream p(work / "p.json");
        p << R"({"blocks":[{"dim":1,"grid":[0.0,0.5,1.0],"values":[0.0,0.4,0.1]},)"
          << R"({"dim":1,"grid":[-1.0,0.0,1.0],"values":[0.3,-0.2,0.5]}],)"
          << R"("A":[[1.0,0.5],[-0.3,1.0]],"b":[0.6,0.8]})";
    }

    auto run = [&]() {
        fs::path out1 = work / "fig";
        fs::path out2 = work / "sol";
        fs::remove_all(out1);
        fs::remove_all(out2);
        std::string cmd1 = sfkit_path + " --deterministic --seed 7 --out-dir " + out1.string() +
                           " figure1 --n-list 1,2,4 --cap 1024 > /dev/null 2>&1";
        std::string cmd2 = sfkit_path + " --deterministic --seed 7 --out-dir " + out2.string() +
                           " solve --in " + (work / "p.json").string() +
                           " --cert approx --gamma 0.4 > /dev/null 2>&1";
        int rc1 = std::system(cmd1.c_str());
        int rc2 = std::system(cmd2.c_str());
        return std::make_tuple(rc1, rc2, slurp_dir(out1), slurp_dir(out2));
    };
    auto [rc1a, rc2a, figA, solA] = run();
    auto [rc1b, rc2b, figB, solB] = run();
    bool ok = rc1a == 0 && rc2a == 0 && rc1b == 0 && rc2b == 0;
    ok = ok && !figA.empty() && !solA.empty();
    ok = ok && figA == figB && solA == solB;
    std::ostringstream d;
    d << figA.size() + solA.size() << " files compared across two runs";
    report("determinism-byte-identical", ok, d.str());
    fs::remove_all(work);
}

}  // namespace

int main(int argc, char** argv) {
    std::string sfkit_path = argc > 1 ? argv[1] : "";
    criterion_sf_exactness();
    criterion_caratheodory_exactness();
    criterion_gap_sandwich();
    criterion_approx_certificate();
    criterion_envelope_value();
    criterion_figure1();
    criterion_concentration();
    criterion_constraint_sampling();
    criterion_determinism(sfkit_path);
    if (g_failures == 0)
        std::printf("all acceptance criteria passed\n");
    else
        std::printf("%d acceptance criteria FAILED\n", g_failures);
    return g_failures;
}
