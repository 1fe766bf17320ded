#pragma once

// Scenario catalogue: each entry owns a config schema, a set of acceptance criteria and a runner that
// fills tables and a summary. Numeric paths never read the clock; timing lives in the manifest only.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "curvlab/asymptotic.hpp"
#include "curvlab/config.hpp"
#include "curvlab/desingularize.hpp"
#include "curvlab/gallery.hpp"
#include "curvlab/report.hpp"
#include "curvlab/spectral.hpp"

namespace curvlab {

struct RunContext {
    int threads = 1;
};

struct Scenario {
    std::string name;
    std::string summary;      // one-line catalogue entry
    std::vector<std::string> criteria;
    std::vector<Param> schema;
    std::function<ScenarioResult(const Settings&, const RunContext&)> run;
};

namespace scenario_detail {

using Coords = std::array<double, kMaxDim>;

inline Criterion criterion(std::string id, std::string what, bool pass, std::string detail, double limit = 0.0) {
    return Criterion{std::move(id), std::move(what), pass, std::move(detail), limit};
}

inline std::string fmt(double v) { return format_number(v); }

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

inline std::vector<double> geometric(double start, double ratio, int points) {
    if (points < 1) throw std::invalid_argument("sweep: need at least one point");
    std::vector<double> v;
    for (int k = 0; k < points; ++k) v.push_back(start * std::pow(ratio, k));
    return v;
}

inline std::mt19937_64 property_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq s{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(s);
}

inline std::uint64_t seed_of(const Settings& s) {
    double v = s.number("property.seed");
    if (!(v >= 0.0)) throw std::invalid_argument("property.seed must be a nonnegative integer");
    return static_cast<std::uint64_t>(v);
}

inline MetricField wavy_torus(int samples, double amp) {
    return sample_metric(torus_chart(3, samples), [amp](const Coords& x) {
        Matd m = Matd::identity(3);
        double w = 1.0 + amp * std::sin(2.0 * kPi * x[0]) * std::cos(2.0 * kPi * x[1]);
        m(0, 0) = w;
        m(1, 1) = 1.0 / w;
        m(2, 2) = 1.0 + 0.5 * amp * std::sin(2.0 * kPi * x[2]);
        return m;
    });
}

inline EdgeData constant_edge(double beta, double eta) {
    EdgeData d;
    d.n = 3;
    d.eta = eta;
    d.beta = [beta](const LinkPoint&) { return beta; };
    return d;
}

// ---------------------------------------------------------------------------------------------

inline ScenarioResult cone_smooth(const Settings& s, const RunContext&) {
    ScenarioResult out;
    Table raw("cap_integrals", {"beta", "cells_per_ninth", "integral", "expected"});
    Table ext("cap_extrapolated", {"beta", "extrapolated", "expected", "abs_error", "observed_order"});
    const double tol = s.number("tolerance.cap");
    bool pass = true;
    std::string worst;
    for (double beta : s.numbers("cap.beta")) {
        auto st = cap_curvature_study(beta, s.number("cap.eps"), s.number("cap.rho"), s.integer("cap.base_cells"),
                                      s.integer("cap.refinements"));
        for (std::size_t i = 0; i < st.values.size(); ++i) raw.add({beta, double(st.cells[i]), st.values[i], st.expected});
        double err = std::abs(st.extrapolated - st.expected);
        ext.add({beta, st.extrapolated, st.expected, err, st.observed_order});
        pass = pass && err <= tol;
        worst += "beta " + fmt(beta) + ": error " + fmt(err) + "; ";
    }
    out.tables = {raw, ext};
    out.criteria.push_back(criterion("C1", "cap curvature integral equals -2 pi beta after extrapolation", pass, worst, 10.0));
    return out;
}

// ---------------------------------------------------------------------------------------------

inline ScenarioResult warped_residual(const Settings& s, const RunContext&) {
    ScenarioResult out;
    const double eta = s.number("residual.eta"), lo = s.number("residual.r_min"), hi = s.number("residual.r_max");
    const int n = s.integer("residual.samples"), ny = s.integer("residual.n_y");
    if (!(lo > 0.0 && hi > lo)) throw std::invalid_argument("residual: need 0 < r_min < r_max");
    if (n < 9) throw std::invalid_argument("residual: samples must be at least 9");
    auto radial = [](const Coords& x) { return 1.0 + 0.5 * std::sin(3.0 * x[0]); };
    const double amp = s.number("residual.link_amplitude");
    auto warped = [amp](const Coords& x) { return 1.0 + 0.5 * std::sin(3.0 * x[0]) + amp * x[0] * x[0] * std::cos(2.0 * kPi * x[2]); };
    const Matd omega = Matd::identity(1);

    // Radial profile: residual on the coarse chart against a refinement estimate of the stencil error.
    ChartSpec coarse = polar_chart(lo, hi, n, 8, {1.0}, 5, true);
    ChartSpec fine = polar_chart(lo, hi, 2 * n - 1, 8, {1.0}, 5, true);
    ScalarField fc = sample_polar_scalar(coarse, radial), ff = sample_polar_scalar(fine, radial);
    MetricField gc = simple_form_metric(fc, {}, omega, coarse), gf = simple_form_metric(ff, {}, omega, fine);
    auto res = warped_curvature_residual(gc, fc, eta);
    auto Rc = scalar_curvature(gc), Rf = scalar_curvature(gf);
    Grid G(coarse), F(fine);
    std::vector<double> fine_by_index(2 * n - 1, std::nan(""));
    for (std::size_t p = 0; p < F.size(); ++p)
        if (Rf.computed[p] && std::isnan(fine_by_index[F.index(p, 0)])) fine_by_index[F.index(p, 0)] = Rf.value[p];
    std::vector<double> res_by_index(n, 0.0), tau_by_index(n, 0.0), r_by_index(n, 0.0);
    std::vector<bool> seen(n, false);
    double max_res = 0.0, tau = 0.0;
    for (std::size_t p = 0; p < G.size(); ++p) {
        if (!res.computed[p]) continue;
        int i = G.index(p, 0);
        double r = G.radius(p);
        r_by_index[i] = r;
        res_by_index[i] = std::max(res_by_index[i], res.value[p]);
        max_res = std::max(max_res, res.value[p]);
        double fv = fine_by_index[2 * i];
        if (!std::isnan(fv)) {
            double t = std::pow(r, 2.0 - eta) * std::abs(Rc.value[p] - fv) * 4.0 / 3.0;
            tau_by_index[i] = std::max(tau_by_index[i], t);
            tau = std::max(tau, t);
        }
        seen[i] = true;
    }
    Table rt("radial_residual", {"r", "weighted_residual", "stencil_error_estimate"});
    for (int i = 0; i < n; ++i)
        if (seen[i]) rt.add({r_by_index[i], res_by_index[i], tau_by_index[i]});

    // Link-dependent profile: window maxima on charts that keep the node count as the window halves.
    const int windows = s.integer("residual.windows");
    const double growth = s.number("residual.growth");
    Table wt("window_residual", {"window", "max_weighted_residual", "ratio_to_previous"});
    bool bounded = true;
    double prev = std::nan("");
    for (int k = 0; k <= windows; ++k) {
        double w = hi * std::pow(0.5, k);
        ChartSpec c = polar_chart(w * lo / hi, w, n, 8, {1.0}, ny, true);
        ScalarField f = sample_polar_scalar(c, warped);
        auto rk = warped_curvature_residual(simple_form_metric(f, {}, omega, c), f, eta);
        double m = 0.0;
        for (std::size_t p = 0; p < rk.value.size(); ++p)
            if (rk.computed[p]) m = std::max(m, rk.value[p]);
        double ratio = std::isnan(prev) ? std::nan("") : m / prev;
        if (!std::isnan(ratio) && ratio > 1.0 + growth) bounded = false;
        wt.add({w, m, ratio});
        prev = m;
    }
    const double factor = s.number("residual.factor");
    bool exact = max_res <= factor * tau;
    out.tables = {rt, wt};
    out.summary["radial"] = {{"max_weighted_residual", max_res}, {"stencil_error_estimate", tau}, {"factor", factor}};
    out.summary["link_dependent_bounded"] = bounded;
    out.criteria.push_back(criterion("C2", "warped-product curvature identity: exact radially, bounded with link dependence",
                                     exact && bounded,
                                     "radial residual " + fmt(max_res) + " vs " + fmt(factor) + " x stencil estimate " + fmt(tau) +
                                         (bounded ? "; window maxima do not grow" : "; window maxima grow"),
                                     30.0));
    return out;
}

// ---------------------------------------------------------------------------------------------

inline ScenarioResult edge_smooth(const Settings& s, const RunContext& ctx) {
    ScenarioResult out;
    EdgeData d = constant_edge(s.number("edge.beta"), s.number("edge.eta"));
    const double a = s.number("edge.h_rr"), b = s.number("edge.h_thth");
    d.h = [a, b](const Coords& x) {
        Matd m(3);
        m(0, 0) = a / x[0];
        m(1, 1) = b * x[0];
        return m;
    };
    SmoothingParams base{s.number("sweep.eps_start"), s.number("smoothing.q"), s.number("smoothing.delta")};
    base.validate(d);
    SweepResolution res;
    res.t_step = s.number("sweep.t_step");
    res.core_fraction = s.number("sweep.core_fraction");
    res.threads = ctx.threads;
    auto eps = geometric(s.number("sweep.eps_start"), s.number("sweep.ratio"), s.integer("sweep.points"));
    auto rep = verify_conclusions(d, base, eps, s.number("sweep.eps_start"), res);

    Table t("sweep", {"epsilon", "negative_norm", "band_min_eps2_R", "c1", "exterior_residual", "exterior_min_R", "min_f",
                      "min_r_df", "max_r_df"});
    for (const auto& r : rep.rows)
        t.add({r.epsilon, r.negative_norm, r.band_min_eps2_R, r.c1, r.exterior_residual, r.exterior_min_R, r.min_f, r.min_r_df,
               r.max_r_df});
    out.tables = {t};
    out.summary["decay_exponent"] = rep.decay_exponent;
    out.summary["expected_exponent"] = rep.expected_exponent;

    const double slope_tol = s.number("tolerance.slope");
    bool c3 = std::isfinite(rep.decay_exponent) && rel(rep.decay_exponent, rep.expected_exponent) <= slope_tol;
    out.criteria.push_back(criterion("C3", "negative-part norm decays at rate (q(eta-2)+2)/q", c3,
                                     "slope " + fmt(rep.decay_exponent) + " vs " + fmt(rep.expected_exponent) + " over " +
                                         std::to_string(eps.size()) + " points"));

    const int halvings = s.integer("concentration.halvings");
    if (halvings + 1 > static_cast<int>(rep.rows.size())) throw std::invalid_argument("concentration.halvings exceeds the sweep");
    double lo = kInfinity, hi = -kInfinity;
    bool positive = true;
    for (int k = 0; k <= halvings; ++k) {
        double v = rep.rows[k].band_min_eps2_R;
        positive = positive && v > 0.0;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double variation = (hi - lo) / lo;
    out.criteria.push_back(criterion("C4", "eps^2 min R on the transition band is positive and stable",
                                     positive && variation < s.number("tolerance.concentration"),
                                     "variation " + fmt(variation) + " across " + std::to_string(halvings) + " halvings"));

    double ext = 0.0, clo = kInfinity, chi = -kInfinity;
    for (const auto& r : rep.rows) {
        ext = std::max(ext, r.exterior_residual);
        clo = std::min(clo, r.c1);
        chi = std::max(chi, r.c1);
    }
    double cvar = (chi - clo) / clo;
    out.criteria.push_back(criterion("C5", "exterior agreement is exact; equivalence constant is stable",
                                     ext == 0.0 && cvar < s.number("tolerance.c1"),
                                     "exterior residual " + fmt(ext) + "; c1 variation " + fmt(cvar)));
    return out;
}

// ---------------------------------------------------------------------------------------------

inline ScalarField uniform_field(const ChartSpec& c, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> U(lo, hi);
    ScalarField f(c);
    for (double& v : f.values) v = U(rng);
    return f;
}

inline ScenarioResult eigen(const Settings& s, const RunContext& ctx) {
    ScenarioResult out;
    auto g = wavy_torus(s.integer("eigen.samples"), s.number("eigen.amplitude"));
    const auto seed = seed_of(s);
    const double tol_c = s.number("tolerance.constant"), tol_shift = s.number("tolerance.shift"),
                 tol_c0 = s.number("tolerance.c0");
    bool all_converged = true, bound_ok = true;
    auto solve = [&](const ScalarField& chi, double& bound) {
        auto r = principal_eigenpair(g, chi);
        bound = eigen_lower_bound(chi, r.harnack_c0, g);
        return r;
    };

    Table ct("constant_potential", {"c", "lambda", "harnack_c0", "residual"});
    bool const_ok = true;
    for (double c : s.numbers("eigen.constants")) {
        double lb = 0.0;
        auto r = solve(ScalarField(g.chart(), c), lb);
        ct.add({c, r.lambda, r.harnack_c0, r.residual});
        const_ok = const_ok && std::abs(r.lambda - c) <= tol_c && std::abs(r.harnack_c0 - 1.0) <= tol_c0;
        all_converged = all_converged && r.converged;
        bound_ok = bound_ok && r.lambda >= lb - 1e-10;
    }

    auto rng = property_rng(seed, 0);
    ScalarField chi = uniform_field(g.chart(), rng, s.number("eigen.chi_lo"), s.number("eigen.chi_hi"));
    double lb0 = 0.0;
    auto base = solve(chi, lb0);
    bound_ok = bound_ok && base.lambda >= lb0 - 1e-10;
    Table st("shift_identity", {"c", "lambda", "expected", "difference"});
    bool shift_ok = true;
    for (double c : s.numbers("eigen.shifts")) {
        ScalarField shifted = chi;
        for (double& v : shifted.values) v += c;
        double lb = 0.0;
        auto r = solve(shifted, lb);
        double diff = r.lambda - (base.lambda + c);
        st.add({c, r.lambda, base.lambda + c, diff});
        shift_ok = shift_ok && std::abs(diff) <= tol_shift * (1.0 + std::abs(r.lambda));
        all_converged = all_converged && r.converged;
        bound_ok = bound_ok && r.lambda >= lb - 1e-10;
    }

    const int pairs = s.integer("eigen.pairs");
    if (pairs < 1) throw std::invalid_argument("eigen.pairs must be positive");
    std::vector<std::array<double, 4>> rows(pairs);
    std::vector<char> conv(pairs, 1);
    parallel_for(pairs, ctx.threads, [&](std::size_t i) {
        auto r = property_rng(seed, i + 1);
        ScalarField lo_chi = uniform_field(g.chart(), r, s.number("eigen.chi_lo"), s.number("eigen.chi_hi"));
        ScalarField bump = uniform_field(g.chart(), r, 0.0, s.number("eigen.bump_hi"));
        ScalarField hi_chi = lo_chi;
        for (std::size_t k = 0; k < hi_chi.size(); ++k) hi_chi[k] += bump[k];
        double b1 = 0.0, b2 = 0.0;
        auto r1 = solve(lo_chi, b1);
        auto r2 = solve(hi_chi, b2);
        rows[i] = {r1.lambda, r2.lambda, b1, b2};
        conv[i] = r1.converged && r2.converged;
    });
    Table pt("monotone_pairs", {"pair", "lambda_low", "lambda_high", "bound_low", "bound_high"});
    bool mono = true;
    for (int i = 0; i < pairs; ++i) {
        const auto& r = rows[i];
        pt.add({double(i), r[0], r[1], r[2], r[3]});
        mono = mono && r[0] <= r[1] + 1e-10 * (1.0 + std::abs(r[1]));
        bound_ok = bound_ok && r[0] >= r[2] - 1e-10 && r[1] >= r[3] - 1e-10;
        all_converged = all_converged && conv[i];
    }
    out.tables = {ct, st, pt};
    out.summary["base_lambda"] = base.lambda;
    out.summary["converged"] = all_converged;
    out.criteria.push_back(criterion("C6", "principal eigenvalue: constants, shift, monotonicity, lower bound, Harnack ratio",
                                     const_ok && shift_ok && mono && bound_ok && all_converged,
                                     std::string("constant ") + (const_ok ? "ok" : "FAIL") + ", shift " + (shift_ok ? "ok" : "FAIL") +
                                         ", monotone " + (mono ? "ok" : "FAIL") + " on " + std::to_string(pairs) + " pairs, bound " +
                                         (bound_ok ? "ok" : "FAIL") + ", converged " + (all_converged ? "ok" : "FAIL")));
    return out;
}

// ---------------------------------------------------------------------------------------------

inline ScenarioResult budget(const Settings& s, const RunContext& ctx) {
    ScenarioResult out;
    EdgeData d = constant_edge(s.number("edge.beta"), 0.9);
    SmoothingParams base{s.number("sweep.eps_start"), s.number("smoothing.q"), s.number("smoothing.delta")};
    base.validate(d);
    SweepResolution res;
    res.threads = ctx.threads;
    auto eps = geometric(s.number("sweep.eps_start"), s.number("sweep.ratio"), s.integer("sweep.points"));
    const double c0 = s.number("budget.c0");
    auto st = budget_study(d, base, eps, c0, s.number("budget.gamma_fraction"), res);
    Table bt("budget_sweep", {"epsilon", "gamma", "negative_norm", "positive", "negative", "weighted_negative", "net"});
    for (const auto& r : st.rows)
        bt.add({r.epsilon, r.gamma, r.negative_norm, r.budget.positive, r.budget.negative, r.budget.weighted_negative, r.budget.net});
    SmoothingParams pmin = base;
    pmin.epsilon = eps.back();
    auto above = budget_row(d, pmin, 2.0 * st.gamma_threshold, c0, res);

    SmoothingParams pp = base;
    pp.epsilon = s.number("pipeline.eps");
    pp.validate(d);
    SweepResolution pres;
    pres.core_fraction = s.number("pipeline.core_fraction");
    pres.t_step = s.number("pipeline.t_step");
    auto psc = psc_pipeline(doubled_tube_model(d, pp, pres));
    Table pt("doubled_tube_pipeline", {"epsilon", "declined", "budget_failed", "lambda", "lower_bound", "harnack_c0", "min_curvature"});
    pt.add({pp.epsilon, double(psc.declined), double(psc.budget_failed), psc.spectral.lambda, psc.lower_bound,
            psc.spectral.harnack_c0, psc.min_curvature});
    out.tables = {bt, pt};
    out.summary["exponents"] = {{"positive", st.positive_exponent}, {"negative", st.negative_exponent}, {"expected", st.expected_exponent}};
    out.summary["gamma_threshold"] = st.gamma_threshold;
    out.summary["net_above_threshold"] = above.budget.net;
    out.summary["pipeline_message"] = psc.message;

    const double tol = s.number("tolerance.exponent");
    bool fit = rel(st.positive_exponent, st.expected_exponent) <= tol && rel(st.negative_exponent, st.expected_exponent) <= tol &&
               std::abs(st.positive_exponent - st.negative_exponent) <= tol * std::abs(st.negative_exponent);
    bool net = st.gamma_threshold > 0.0 && st.net_positive_below_threshold;
    bool positive = !psc.declined && !psc.budget_failed && psc.min_curvature > 0.0;
    out.criteria.push_back(criterion("C7", "budget columns share the exponent 2 - 2/q; net positive below threshold; pipeline positive",
                                     fit && net && positive,
                                     "exponents " + fmt(st.positive_exponent) + " / " + fmt(st.negative_exponent) + " vs " +
                                         fmt(st.expected_exponent) + "; threshold " + fmt(st.gamma_threshold) + "; pipeline min R " +
                                         fmt(psc.min_curvature)));
    return out;
}

// ---------------------------------------------------------------------------------------------

struct Wave {
    std::array<int, 3> k{};
    double amplitude = 0.0, phase = 0.0;
    double operator()(const Coords& x) const {
        return amplitude * std::sin(2.0 * kPi * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]) + phase);
    }
};

inline std::vector<Wave> random_waves(std::mt19937_64& rng, int count, int modes, double amp) {
    std::uniform_int_distribution<int> K(-modes, modes);
    std::uniform_real_distribution<double> A(-amp, amp), P(0.0, 2.0 * kPi);
    std::vector<Wave> w(count);
    for (auto& v : w) {
        v.k = {K(rng), K(rng), K(rng)};
        v.amplitude = A(rng);
        v.phase = P(rng);
    }
    return w;
}

inline ScenarioResult psc_pipeline_scenario(const Settings& s, const RunContext& ctx) {
    ScenarioResult out;
    const auto seed = seed_of(s);
    const int pairs = s.integer("dual.pairs"), nc = s.integer("dual.coarse"), nf = s.integer("dual.fine"),
              modes = s.integer("dual.modes");
    if (pairs < 1 || nc < 8 || nf <= nc) throw std::invalid_argument("dual: need pairs >= 1 and 8 <= coarse < fine");
    const double ga = s.number("dual.metric_amplitude"), ua = s.number("dual.factor_amplitude");
    if (!(ga >= 0.0 && ga < 0.5 && ua >= 0.0 && ua < 0.5)) throw std::invalid_argument("dual: amplitudes must lie in [0, 0.5)");
    std::vector<std::array<double, 3>> rows(pairs);
    parallel_for(pairs, ctx.threads, [&](std::size_t i) {
        auto rng = property_rng(seed, 1000 + i);
        // Each of the six components gets its own wave packet; dividing by 3 keeps the metric definite.
        std::vector<std::vector<Wave>> comp(6);
        for (auto& c : comp) c = random_waves(rng, 3, modes, ga / 3.0);
        auto uw = random_waves(rng, 3, modes, ua / 3.0);
        TensorFn g = [&comp](const Coords& x) {
            Matd m = Matd::identity(3);
            int c = 0;
            for (int a = 0; a < 3; ++a)
                for (int b = a; b < 3; ++b, ++c) {
                    double v = 0.0;
                    for (const auto& w : comp[c]) v += w(x);
                    m(a, b) += v;
                    m(b, a) = m(a, b);
                }
            return m;
        };
        PointFn u = [&uw](const Coords& x) {
            double v = 1.0;
            for (const auto& w : uw) v += w(x);
            return v;
        };
        auto err = [&](int n) {
            ChartSpec c = torus_chart(3, n);
            MetricField gm = sample_metric(c, g);
            auto tr = conformal_transform(gm, sample_scalar(c, u));
            auto direct = scalar_curvature(tr.metric);
            double e = 0.0;
            for (std::size_t p = 0; p < gm.size(); ++p) e = std::max(e, std::abs(tr.curvature.value[p] - direct.value[p]));
            return e;
        };
        double e1 = err(nc), e2 = err(nf);
        rows[i] = {e1, e2, std::log(e1 / e2) / std::log(double(nf) / nc)};
    });
    Table dt("dual_path", {"pair", "error_coarse", "error_fine", "observed_order"});
    double min_order = kInfinity;
    for (int i = 0; i < pairs; ++i) {
        dt.add({double(i), rows[i][0], rows[i][1], rows[i][2]});
        min_order = std::min(min_order, rows[i][2]);
    }

    // Pipeline on two closed models: a positive product and a wavy torus, which admits no positive metric.
    Table pt("pipeline_models", {"model", "declined", "budget_failed", "lambda", "lower_bound", "min_curvature"});
    {
        const int nr = s.integer("pipeline.sphere_samples");
        auto c = polar_chart(0.0, kPi, nr, 16, {1.0}, 5, false, Boundary::reflecting);
        PscModel m;
        m.g = sample_polar_metric(c, [](const Coords& x) {
            Matd g = Matd::identity(3);
            g(1, 1) = std::sin(x[0]) * std::sin(x[0]);
            return g;
        });
        m.R = ScalarField(c, 2.0);
        m.zeta = ScalarField(c, 1.0);
        auto r = psc_pipeline(m);
        pt.add({0.0, double(r.declined), double(r.budget_failed), r.spectral.lambda, r.lower_bound, r.min_curvature});
        out.summary["sphere_product"] = {{"min_curvature", r.min_curvature}, {"message", r.message}};
    }
    {
        PscModel m;
        m.g = wavy_torus(s.integer("pipeline.torus_samples"), 0.2);
        auto R = scalar_curvature(m.g);
        m.R = R.value;
        m.zeta = ScalarField(m.g.chart(), 1.0);
        auto r = psc_pipeline(m);
        pt.add({1.0, double(r.declined), double(r.budget_failed), r.spectral.lambda, r.lower_bound, r.min_curvature});
        out.summary["wavy_torus"] = {{"lambda", r.spectral.lambda}, {"message", r.message}};
    }
    out.tables = {dt, pt};
    out.summary["min_order"] = min_order;
    const double need = s.number("tolerance.order");
    out.criteria.push_back(criterion("C8", "conformal curvature: formula path and stencil path agree at second order",
                                     min_order >= need,
                                     "minimum observed order " + fmt(min_order) + " over " + std::to_string(pairs) + " pairs"));
    return out;
}

// ---------------------------------------------------------------------------------------------

inline ScenarioResult green_blowup(const Settings& s, const RunContext&) {
    ScenarioResult out;
    const double half = s.number("green.half");
    auto h = sample_metric(cube_chart(3, s.integer("green.samples"), -half, half), [](const Coords&) -> Matd { return Matd::identity(3); });
    GreenOptions opt;
    opt.buffer_cells = s.integer("green.buffer_cells");
    opt.fit_fraction = s.number("green.fit_fraction");
    opt.annuli = s.integer("green.annuli");
    auto G = greens_function(h, {Point3{0, 0, 0}}, ScalarField(h.chart(), 0.0), opt);
    const double target = 1.0 / (32.0 * kPi);
    Table at("annuli", {"d_lo", "d_hi", "min_G_d", "max_G_d"});
    bool bounds = G.positive && std::isfinite(G.c_G) && !G.annuli.empty();
    for (const auto& a : G.annuli) {
        at.add({a.d_lo, a.d_hi, a.min_Gd, a.max_Gd});
        bounds = bounds && a.min_Gd >= 1.0 / G.c_G && a.max_Gd <= G.c_G && a.min_Gd > 0.0;
    }
    bool coeff = rel(G.coefficient[0], target) <= s.number("tolerance.coefficient");

    auto Gf = [&G](const Point3& y) { return G.evaluate(y); };
    TensorFn flat = [](const Coords&) -> Matd { return Matd::identity(3); };
    auto inv = inversion_equivalence(inversion_pullback(flat, Gf, s.number("inversion.sigma")), s.numbers("inversion.radii"),
                                     s.number("tolerance.drift"));
    Table it("inversion", {"outer_radius", "equivalence_constant"});
    for (std::size_t i = 0; i < inv.constants.size(); ++i) it.add({inv.outer_radii[i], inv.constants[i]});

    Table nt("blowup_necks", {"sigma", "interior", "r_min", "area_min", "leading_r", "leading_area"});
    auto radii = log_radii(s.number("neck.r_lo"), s.number("neck.r_hi"), s.integer("neck.samples"));
    double A = G.coefficient[0], B = G.offset[0];
    auto sigmas = s.numbers("blowup.sigmas");
    bool monotone = sigmas.size() >= 2;
    double prev_area = kInfinity, prev_sigma = kInfinity;
    for (double sg : sigmas) {
        if (!(sg > 0.0 && sg < prev_sigma)) throw std::invalid_argument("blowup.sigmas must be positive and decreasing");
        auto rep = minimal_sphere_search(blowup_sphere_area(G, 0, sg), radii);
        double c = sg * A / (1.0 + sg * B);
        nt.add({sg, double(rep.interior), rep.r_min, rep.area_min, c, 64.0 * kPi * c * c * std::pow(1.0 + sg * B, 4)});
        monotone = monotone && rep.interior && rep.area_min < prev_area;
        prev_area = rep.area_min;
        prev_sigma = sg;
    }
    out.tables = {at, it, nt};
    out.summary["coefficient"] = G.coefficient[0];
    out.summary["offset"] = G.offset[0];
    out.summary["c_G"] = G.c_G;
    out.summary["inversion_drift"] = inv.drift;
    out.summary["cg_iterations"] = G.solve.iterations;
    out.criteria.push_back(criterion("C10", "Green coefficient, two-sided bounds, inversion stability, neck area shrinking with sigma",
                                     coeff && bounds && inv.stable && monotone,
                                     "G d -> " + fmt(G.coefficient[0]) + " vs " + fmt(target) + "; c_G " + fmt(G.c_G) + "; drift " +
                                         fmt(inv.drift) + "; necks " + (monotone ? "monotone" : "NOT monotone")));
    return out;
}

// ---------------------------------------------------------------------------------------------

inline double bump(double r, double c) { return r < c ? std::pow(1.0 - r * r / (c * c), 4) : 0.0; }

inline ScenarioResult pmt_mass(const Settings& s, const RunContext& ctx) {
    ScenarioResult out;
    const double mtol = s.number("tolerance.mass"), ntol = s.number("tolerance.neck");

    Table mt("schwarzschild_mass", {"m", "extrapolated_mass", "relative_error", "extrapolation_residual"});
    Table ft("schwarzschild_flux", {"m", "radius", "flux_mass"});
    bool masses = true;
    for (double m : s.numbers("mass.values")) {
        auto rep = adm_mass(schwarzschild(m), s.numbers("mass.radii"));
        double e = rel(rep.mass, m);
        mt.add({m, rep.mass, e, rep.extrapolation_residual});
        for (std::size_t i = 0; i < rep.radii.size(); ++i) ft.add({m, rep.radii[i], rep.flux[i]});
        masses = masses && !rep.divergent && e <= mtol;
    }

    Table nt("horizon_necks", {"m", "r_min", "area_min", "expected_r", "expected_area"});
    bool necks = true;
    for (double m : s.numbers("neck.masses")) {
        if (!(m > 0.0)) throw std::invalid_argument("neck.masses must be positive");
        auto rep = minimal_sphere_search(schwarzschild(m), s.number("neck.extent") * m, s.integer("neck.samples"));
        nt.add({m, rep.r_min, rep.area_min, 0.5 * m, 16.0 * kPi * m * m});
        necks = necks && rep.interior && rel(rep.r_min, 0.5 * m) <= ntol && rel(rep.area_min, 16.0 * kPi * m * m) <= ntol;
    }

    const double b0 = s.number("ring.beta"), bw = s.number("ring.beta_wave");
    auto ring = edge_ring(s.number("ring.radius"), s.number("ring.tube"),
                          [b0, bw](const LinkPoint& y) { return b0 + bw * std::cos(y[0]); }, s.number("ring.background"));
    SweepResolution res;
    res.core_fraction = s.number("ring.core_fraction");
    res.t_step = s.number("ring.t_step");
    res.n_y = s.integer("ring.n_y");
    res.threads = ctx.threads;
    auto study = mass_convergence_study(ring, SmoothingParams{}, s.numbers("ring.eps"), res);
    Table rt("ring_mass_sweep", {"epsilon", "zeroing_shift", "max_deviation", "mass"});
    for (const auto& r : study.rows) rt.add({r.epsilon, r.shift, r.max_deviation, r.mass});
    bool ring_ok = study.converged(s.number("tolerance.spread")) && study.floor > 0.0;

    auto sch = schwarzschild(s.number("variation.mass"));
    TensorFn g = [&sch](const Coords& x) { return sch.metric_at(x); };
    TensorFn hpert = [](const Coords& x) {
        double w = bump(std::abs(x[0] - 2.0), 0.8) * bump(std::abs(x[1]), 0.8) * bump(std::abs(x[2]), 0.8);
        Matd m(3);
        m(0, 0) = w;
        m(1, 1) = 0.5 * w;
        m(0, 1) = m(1, 0) = 0.3 * w;
        return m;
    };
    const int vs = s.integer("variation.samples");
    ChartSpec vc;
    vc.axes = {Axis{1.0, 3.0, vs, Boundary::clamped}, Axis{-1.0, 1.0, vs, Boundary::clamped}, Axis{-1.0, 1.0, vs, Boundary::clamped}};
    Table vt("mass_first_variation", {"t", "measured", "ricci_pairing", "ratio", "expected_ratio"});
    bool variation = true;
    const double C = FirstVariation::expected_ratio();
    for (double t : s.numbers("variation.t")) {
        auto fv = mass_first_variation(g, hpert, vc, t);
        vt.add({t, fv.measured, fv.ricci_pairing, fv.ratio, C});
        variation = variation && rel(fv.ratio, C) <= s.number("tolerance.variation");
    }

    // Linearized scalar curvature against symmetric differences, and its integral for compact h.
    MetricField gw = sample_metric(torus_chart(3, s.integer("linearized.samples")), [](const Coords& x) {
        Matd m = Matd::identity(3);
        const double w = 2.0 * kPi, amp = 0.1;
        m(0, 0) += amp * std::sin(w * x[1]);
        m(1, 1) += amp * std::cos(w * x[0]);
        m(0, 1) = m(1, 0) = 0.5 * amp * std::sin(w * (x[0] + x[1]));
        m(2, 2) += amp * std::sin(w * (x[0] - x[2]));
        return m;
    });
    TensorField hw = sample_tensor(gw.chart(), [](const Coords& x) {
        Matd m(3);
        const double w = 2.0 * kPi;
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) m(i, j) = m(j, i) = 0.3 * std::sin(w * (x[0] + 2 * x[1] - (i + j) * x[2]) + i);
        return m;
    });
    auto dR = linearized_scalar_curvature(gw, hw);
    const double tstep = s.number("linearized.t");
    auto shifted = [&](double t) {
        TensorField m = gw.g;
        for (std::size_t i = 0; i < m.comps.size(); ++i) m.comps[i] += t * hw.comps[i];
        return scalar_curvature(MetricField(m));
    };
    auto Rp = shifted(tstep), Rm = shifted(-tstep);
    double num = 0.0, den = 0.0;
    for (std::size_t p = 0; p < gw.size(); ++p) {
        double fd = (Rp.value[p] - Rm.value[p]) / (2.0 * tstep);
        num = std::max(num, std::abs(fd - dR.value[p]));
        den = std::max(den, std::abs(fd));
    }
    double lin_err = num / den;
    ChartSpec bc = torus_chart(3, s.integer("linearized.bump_samples"));
    MetricField gf = sample_metric(bc, [](const Coords&) -> Matd { return Matd::identity(3); });
    TensorField hb = sample_tensor(bc, [](const Coords& x) {
        double d2 = 0.0;
        for (int k = 0; k < 3; ++k) d2 += (x[k] - 0.5) * (x[k] - 0.5);
        double b = bump(std::sqrt(d2), 0.35);
        Matd m(3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m(i, j) = b * (i == j ? 1.0 + 0.3 * i : 0.2 * (i + j) * x[0]);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < i; ++j) m(i, j) = m(j, i);
        return m;
    });
    auto dRb = linearized_scalar_curvature(gf, hb);
    double total = integrate_signed(dRb.value, gf, dRb.computed), scale = integrate(dRb.value, gf, dRb.computed, 1.0);
    Table lt("linearized_curvature", {"relative_error", "integral", "integral_scale"});
    lt.add({lin_err, total, scale});
    bool lin_ok = lin_err <= s.number("tolerance.linearized") && std::abs(total) <= 1e-12 * std::max(1.0, scale) && scale > 0.0;

    out.tables = {mt, ft, nt, rt, vt, lt};
    out.summary["ring"] = {{"background", study.background},
                           {"shell_negative_mass", study.shell.negative_mass},
                           {"shell_signed_mass", study.shell.signed_mass},
                           {"shell_oracle", study.shell.oracle_signed},
                           {"extrapolated", study.extrapolated},
                           {"spread", study.spread},
                           {"floor", study.floor}};
    out.criteria.push_back(criterion("C9", "linearized scalar curvature matches symmetric differences; integrates to zero",
                                     lin_ok, "relative error " + fmt(lin_err) + "; integral " + fmt(total) + " of scale " + fmt(scale)));
    out.criteria.push_back(criterion("C11", "mass: Schwarzschild flux, horizon neck, ring sweep, first variation",
                                     masses && necks && ring_ok && variation,
                                     std::string("masses ") + (masses ? "ok" : "FAIL") + ", necks " + (necks ? "ok" : "FAIL") +
                                         ", ring spread " + fmt(study.spread) + " floor " + fmt(study.floor) + ", first variation " +
                                         (variation ? "ok" : "FAIL")));
    return out;
}

// ---------------------------------------------------------------------------------------------

inline ScenarioResult neck(const Settings& s, const RunContext&) {
    ScenarioResult out;
    Table t("minimal_spheres", {"m", "interior", "r_min", "area_min", "enclosure_radius", "area_over_16_pi_m2"});
    for (double m : s.numbers("neck.masses")) {
        if (m == 0.0) throw std::invalid_argument("neck.masses: zero mass has no scale");
        double extent = s.number("neck.extent") * std::abs(m);
        auto rep = minimal_sphere_search(schwarzschild(m), extent, s.integer("neck.samples"));
        t.add({m, double(rep.interior), rep.r_min, rep.area_min, rep.enclosure_radius, rep.area_min / (16.0 * kPi * m * m)});
    }
    out.tables = {t};
    return out;
}

// ---------------------------------------------------------------------------------------------

inline ScenarioResult gauss_bonnet(const Settings& s, const RunContext&) {
    ScenarioResult out;
    Table st("round_sphere", {"samples", "total", "euler_residual"});
    std::vector<double> sres;
    for (double n : s.numbers("sphere.samples")) {
        auto r = gauss_bonnet_check(round_sphere_surface(static_cast<int>(n)));
        st.add({n, r.total, r.euler_residual});
        sres.push_back(r.euler_residual);
    }
    const double b = s.number("torus.beta"), cr = s.number("torus.cap_radius");
    std::vector<ConePoint> cones{{b, 0, 0.25, 0.5, cr}, {-b, 0, 0.75, 0.5, cr}};
    Table tt("cone_torus", {"samples", "total", "regular", "cap_first", "cap_second", "residual", "cap_error"});
    std::vector<double> tres;
    for (double n : s.numbers("torus.samples")) {
        auto r = gauss_bonnet_check(cone_torus_surface(cones, static_cast<int>(n)));
        tt.add({n, r.total, r.regular, r.caps[0], r.caps[1], r.residual, r.cap_error});
        tres.push_back(r.residual);
    }
    auto order = [](const std::vector<double>& e) {
        return e.size() >= 2 ? std::log2(e[e.size() - 2] / e.back()) : std::nan("");
    };
    out.tables = {st, tt};
    out.summary["sphere_order"] = order(sres);
    out.summary["torus_order"] = order(tres);
    return out;
}

// ---------------------------------------------------------------------------------------------

inline ScenarioResult genus(const Settings& s, const RunContext&) {
    ScenarioResult out;
    const int lo = s.integer("genus.min"), hi = s.integer("genus.max");
    if (lo < 2 || hi < lo) throw std::invalid_argument("genus: need 2 <= min <= max");
    Table t("flat_cone_surfaces",
            {"genus", "cone_points", "cone_angle", "beta", "beta_sum", "euler_from_deficits", "euler_expected", "consistent", "angles_exceed_full"});
    bool ok = true;
    for (int g = lo; g <= hi; ++g) {
        auto r = flat_genus_surface(g);
        t.add({double(g), double(r.cone_points), r.cone_angle, r.beta, r.beta_sum, double(r.euler_from_deficits),
               double(r.euler_expected), double(r.consistent), double(r.angles_exceed_full)});
        ok = ok && r.consistent && r.angles_exceed_full;
    }
    out.tables = {t};
    out.criteria.push_back(criterion("C12-genus", "flat cone surfaces: deficits balance the Euler characteristic exactly", ok,
                                     "genus " + std::to_string(lo) + " to " + std::to_string(hi)));
    return out;
}

inline ScenarioResult jump(const Settings& s, const RunContext&) {
    ScenarioResult out;
    Table t("half_sphere_jump", {"a", "H_flat", "H_round", "sum", "expected", "relative_error", "admissible"});
    Table rt("riccati_identity", {"a", "sample", "rhs_flat", "R_flat", "rhs_round", "R_round"});
    auto samples = interface_samples(s.integer("jump.n_theta"), s.integer("jump.n_phi"));
    bool ok = true;
    double worst = 0.0;
    for (double a : s.numbers("jump.radii")) {
        auto [flat, round] = half_sphere_interface(a);
        auto j = mean_curvature_jump(flat, round, 3, samples, 1e-6, s.number("jump.step"));
        double e = rel(j.sum, -2.0 / a);
        t.add({a, j.H_first, j.H_second, j.sum, -2.0 / a, e, double(j.admissible)});
        for (std::size_t i = 0; i < j.samples.size(); ++i) {
            const auto& q = j.samples[i];
            rt.add({a, double(i), q.rhs_first, q.R_first, q.rhs_second, q.R_second});
        }
        ok = ok && e <= s.number("tolerance.jump") && !j.admissible;
        worst = std::max(worst, e);
    }
    out.tables = {t, rt};
    out.criteria.push_back(criterion("C12-jump", "half-sphere cap: mean-curvature sum -2/a", ok, "worst relative error " + fmt(worst)));
    return out;
}

inline ScenarioResult cube(const Settings& s, const RunContext&) {
    ScenarioResult out;
    const int n = s.integer("cube.samples");
    const double skew = s.number("cube.skew"), bend = s.number("cube.bend");
    TensorFn flat = [](const Coords&) -> Matd { return Matd::identity(3); };
    std::vector<std::pair<std::string, TensorFn>> cases{
        {"flat", flat}, {"acute_convex", skewed_cube_metric(skew, bend)}, {"obtuse", skewed_cube_metric(-skew, 0.0)}};
    Table et("edges", {"case", "axis_a", "side_a", "axis_b", "side_b", "min_angle", "max_angle", "doubled_max", "borderline"});
    Table ft("faces", {"case", "axis", "side", "min_H", "max_H", "doubled_jump"});
    Table st("strata", {"case", "faces_pass", "edges_pass", "vertices_pass", "vertex_equivalence", "min_R", "all_strict"});
    bool exact = true;
    for (std::size_t c = 0; c < cases.size(); ++c) {
        auto r = gromov_cube_report(cases[c].second, n);
        for (const auto& e : r.edges) {
            et.add({double(c), double(e.axis_a), double(e.side_a), double(e.axis_b), double(e.side_b), e.min_angle, e.max_angle,
                    e.doubled_max, double(e.borderline)});
            if (c == 0)
                exact = exact && e.min_angle == 0.5 * kPi && e.max_angle == 0.5 * kPi && e.doubled_max == 2.0 * kPi && e.borderline;
        }
        for (const auto& f : r.faces) ft.add({double(c), double(f.axis), double(f.side), f.min_H, f.max_H, f.doubled_jump});
        st.add({double(c), double(r.faces_pass), double(r.edges_pass), double(r.vertices_pass), r.vertex_equivalence, r.min_R,
                double(r.all_strict)});
        out.summary["cases"].push_back(cases[c].first);
    }
    out.tables = {et, ft, st};
    out.criteria.push_back(criterion("C12-cube", "flat cube: dihedral angles pi/2 and doubled angle 2 pi exactly", exact,
                                     exact ? "all 12 edges exact and borderline" : "flat cube edges not exact"));
    return out;
}

inline Param num(std::string k, std::string v, std::string help) { return {std::move(k), ParamKind::number, std::move(v), std::move(help)}; }
inline Param whole(std::string k, std::string v, std::string help) { return {std::move(k), ParamKind::integer, std::move(v), std::move(help)}; }
inline Param list(std::string k, std::string v, std::string help) { return {std::move(k), ParamKind::numbers, std::move(v), std::move(help)}; }

}  // namespace scenario_detail

/// The catalogue in its stable listing order.
inline const std::vector<Scenario>& catalog() {
    using namespace scenario_detail;
    static const std::vector<Scenario> c{
        {"cone-smooth", "smoothed cone cap: Gauss curvature integral against the angle deficit", {"C1"},
         {list("cap.beta", "-0.5, -0.25", "cone parameters"), num("cap.eps", "0.1", "smoothing scale"),
          num("cap.rho", "1", "tube radius"), whole("cap.base_cells", "8", "radial cells per ninth of eps rho"),
          whole("cap.refinements", "3", "grid doublings"), num("tolerance.cap", "1e-3", "absolute tolerance")},
         cone_smooth},
        {"edge-smooth", "edge desingularization: decay rate, band concentration, exterior agreement", {"C3", "C4", "C5"},
         {num("edge.beta", "-0.5", "constant cone parameter"), num("edge.eta", "0.9", "edge regularity"),
          num("edge.h_rr", "-0.4", "h_rr = a / r"), num("edge.h_thth", "-0.1", "h_thth = b r"),
          num("smoothing.q", "1.6", "norm exponent"), num("smoothing.delta", "0.1", "q - n/2"),
          num("sweep.eps_start", "1e-2", "largest epsilon"), num("sweep.ratio", "0.5", "epsilon ratio"),
          whole("sweep.points", "8", "sweep length"), num("sweep.t_step", "0.02", "log-radial spacing"),
          num("sweep.core_fraction", "1e-6", "inner radius over eps rho"), num("tolerance.slope", "0.1", "relative slope tolerance"),
          whole("concentration.halvings", "3", "halvings for the band check"), num("tolerance.concentration", "0.2", "band variation"),
          num("tolerance.c1", "0.05", "equivalence-constant variation")},
         edge_smooth},
        {"warped-residual", "warped-product curvature identity on the simple form", {"C2"},
         {num("residual.eta", "0.9", "weight exponent"), num("residual.r_min", "1e-3", "inner radius"),
          num("residual.r_max", "0.5", "outer radius"), whole("residual.samples", "121", "radial samples (coarse)"),
          whole("residual.n_y", "24", "link samples"), num("residual.link_amplitude", "0.2", "link-dependent part of f"),
          whole("residual.windows", "3", "window halvings"), num("residual.growth", "0.1", "allowed growth per halving"),
          num("residual.factor", "5", "multiple of the stencil error estimate")},
         warped_residual},
        {"eigen", "principal eigenpair of the perturbed conformal Laplacian", {"C6"},
         {whole("eigen.samples", "8", "torus samples per axis"), num("eigen.amplitude", "0.2", "metric wave amplitude"),
          list("eigen.constants", "1, 2.5", "constant potentials"), list("eigen.shifts", "0.5, -2, 10", "potential shifts"),
          whole("eigen.pairs", "100", "random monotonicity pairs"), num("eigen.chi_lo", "-2", "potential lower end"),
          num("eigen.chi_hi", "2", "potential upper end"), num("eigen.bump_hi", "1", "largest pointwise increase"),
          whole("property.seed", "1", "seed of the random pairs"), num("tolerance.constant", "1e-6", "constant potential"),
          num("tolerance.shift", "1e-10", "shift identity, relative"), num("tolerance.c0", "1e-6", "Harnack ratio")},
         eigen},
        {"budget", "positivity budget of the truncated curvature across an epsilon sweep", {"C7"},
         {num("edge.beta", "-0.5", "constant cone parameter"), num("smoothing.q", "1.6", "norm exponent"),
          num("smoothing.delta", "0.1", "q - n/2"), num("sweep.eps_start", "1e-2", "largest epsilon"),
          num("sweep.ratio", "0.5", "epsilon ratio"), whole("sweep.points", "4", "sweep length"),
          num("budget.c0", "1.5", "Harnack constant"), num("budget.gamma_fraction", "0.5", "gamma over the threshold"),
          num("tolerance.exponent", "0.1", "relative exponent tolerance"), num("pipeline.eps", "0.1", "doubled tube epsilon"),
          num("pipeline.core_fraction", "1e-3", "doubled tube core"), num("pipeline.t_step", "0.025", "doubled tube spacing")},
         budget},
        {"psc-pipeline", "conformal change to positive curvature and its dual-path check", {"C8"},
         {whole("dual.pairs", "20", "random (g, u) pairs"), whole("dual.coarse", "16", "coarse torus samples"),
          whole("dual.fine", "32", "fine torus samples"), whole("dual.modes", "1", "largest wave number"),
          num("dual.metric_amplitude", "0.1", "metric perturbation"), num("dual.factor_amplitude", "0.1", "factor perturbation"),
          whole("property.seed", "1", "seed of the random pairs"), num("tolerance.order", "1.7", "minimum order"),
          whole("pipeline.sphere_samples", "40", "sphere product radial samples"),
          whole("pipeline.torus_samples", "10", "wavy torus samples")},
         psc_pipeline_scenario},
        {"pmt-mass", "ADM mass: Schwarzschild, horizon, edge ring sweep, first variation, linearized curvature", {"C9", "C11"},
         {list("mass.values", "0.5, 1, -0.1", "Schwarzschild masses"), list("mass.radii", "8, 16, 32, 64", "doubling flux radii"),
          num("tolerance.mass", "0.01", "relative mass tolerance"), list("neck.masses", "0.5, 1, 2", "neck masses"),
          num("neck.extent", "50", "search range over m"), whole("neck.samples", "200", "search radii"),
          num("tolerance.neck", "0.005", "neck tolerance"), num("ring.radius", "1", "ring radius"),
          num("ring.tube", "0.05", "tube radius"), num("ring.beta", "-0.5", "mean cone parameter"),
          num("ring.beta_wave", "0.1", "cone parameter variation"), num("ring.background", "0", "background mass"),
          list("ring.eps", "0.4, 0.2, 0.1, 0.05", "epsilon sweep"), num("ring.core_fraction", "1e-3", "tube core"),
          num("ring.t_step", "0.03", "tube spacing"), whole("ring.n_y", "8", "link samples"),
          num("tolerance.spread", "0.02", "spread of the last three masses"), num("variation.mass", "1", "background mass"),
          list("variation.t", "1e-3, 5e-4", "difference steps"), whole("variation.samples", "33", "samples per axis"),
          num("tolerance.variation", "0.05", "ratio tolerance"), whole("linearized.samples", "12", "torus samples"),
          num("linearized.t", "1e-4", "difference step"), num("tolerance.linearized", "1e-4", "relative error"),
          whole("linearized.bump_samples", "16", "compact perturbation samples")},
         pmt_mass},
        {"green-blowup", "Green's function, conformal blowup, inversion chart and necks", {"C10"},
         {whole("green.samples", "41", "cube samples per axis"), num("green.half", "1", "cube half width"),
          whole("green.buffer_cells", "3", "excluded cells around the pole"), num("green.fit_fraction", "0.5", "fit range"),
          whole("green.annuli", "8", "bound annuli"), num("tolerance.coefficient", "0.02", "relative coefficient tolerance"),
          num("inversion.sigma", "8", "blowup parameter"), list("inversion.radii", "512, 1024, 2048", "outer radii"),
          num("tolerance.drift", "0.1", "equivalence drift"), list("blowup.sigmas", "8, 4, 2, 1, 0.5", "blowup sweep"),
          num("neck.r_lo", "1e-4", "search inner radius"), num("neck.r_hi", "0.45", "search outer radius"),
          whole("neck.samples", "120", "search radii")},
         green_blowup},
        {"neck", "minimal enclosing spheres of rotationally symmetric ends", {},
         {list("neck.masses", "0.25, 0.5, 1, 2, -0.5", "Schwarzschild masses"), num("neck.extent", "50", "search range over |m|"),
          whole("neck.samples", "200", "search radii")},
         neck},
        {"gauss-bonnet", "Gauss-Bonnet on the round sphere and a cone torus", {},
         {list("sphere.samples", "16, 32, 64", "patch samples"), list("torus.samples", "32, 64, 128", "torus samples"),
          num("torus.beta", "0.5", "cone parameters +beta and -beta"), num("torus.cap_radius", "0.15", "cap radius")},
         gauss_bonnet},
        {"genus", "flat genus-g surfaces with four equal cone points", {"C12-genus"},
         {whole("genus.min", "2", "smallest genus"), whole("genus.max", "8", "largest genus")},
         genus},
        {"jump", "mean-curvature jump across a glued interface", {"C12-jump"},
         {list("jump.radii", "0.5, 1, 2", "sphere radii"), whole("jump.n_theta", "5", "polar samples"),
          whole("jump.n_phi", "4", "azimuthal samples"), num("jump.step", "1e-4", "difference step"),
          num("tolerance.jump", "0.01", "relative tolerance")},
         jump},
        {"cube", "doubled cube strata: faces, edges, vertices", {"C12-cube"},
         {whole("cube.samples", "9", "samples per edge"), num("cube.skew", "0.1", "off-diagonal skew"),
          num("cube.bend", "1", "conformal bending")},
         cube},
    };
    return c;
}

inline const Scenario* find_scenario(const std::string& name) {
    for (const auto& s : catalog())
        if (s.name == name) return &s;
    return nullptr;
}

struct RunOptions {
    std::filesystem::path out;  // overrides output.dir
    int threads = 1;
    std::optional<std::uint64_t> seed;
};

/// Validates, runs and writes one scenario. Config errors throw ConfigError before any computation.
inline RunManifest run_scenario(Config cfg, const RunOptions& opt, ScenarioResult* keep = nullptr) {
    const Scenario* sc = find_scenario(cfg.scenario());
    if (!sc) throw ConfigError({cfg.where("scenario") + ": field scenario: unknown scenario '" + cfg.scenario() + "'"});
    if (opt.seed) {
        bool randomized = std::any_of(sc->schema.begin(), sc->schema.end(), [](const Param& p) { return p.key == "property.seed"; });
        if (randomized) cfg.set("property.seed", std::to_string(*opt.seed));
    }
    if (opt.threads < 1) throw ConfigError({"--threads: must be at least 1"});
    Settings settings(cfg, sc->schema);

    RunManifest m;
    m.scenario = sc->name;
    m.config_hash = cfg.hash();
    ScenarioResult r;
    auto t0 = std::chrono::steady_clock::now();
    try {
        r = sc->run(settings, RunContext{opt.threads});
    } catch (const std::exception& e) {
        r = ScenarioResult{};
        r.error = e.what();
        for (const auto& id : sc->criteria) r.criteria.push_back({id, "run aborted", false, e.what(), 0.0});
    }
    m.run_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (auto& c : r.criteria)
        if (c.time_limit > 0.0 && m.run_seconds > c.time_limit) {
            c.pass = false;
            c.detail += "; runtime " + format_number(m.run_seconds) + " s exceeds " + format_number(c.time_limit) + " s";
        }
    r.summary["settings"] = settings.to_json();
    m.criteria = r.criteria;
    m.passed = r.passed();
    std::filesystem::path dir = opt.out;
    if (dir.empty()) dir = cfg.has("output.dir") ? std::filesystem::path(cfg.raw("output.dir")) : std::filesystem::path("out") / sc->name;
    write_artifacts(dir, r, m);
    if (keep) *keep = std::move(r);
    return m;
}

}  // namespace curvlab
