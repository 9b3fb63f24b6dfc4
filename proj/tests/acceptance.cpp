// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "test_util.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <optional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace diffcorr;

namespace {

// Published reference values, mean and Monte-Carlo SD over replications.
constexpr double model1_dstar_spectral = 0.50, model1_dstar_spectral_sd = 0.41;
constexpr double model1_sample_spectral = 7.28, model1_sample_spectral_sd = 0.93;
constexpr double model2_dstar_spectral = 0.98, model2_dstar_spectral_sd = 1.00;
constexpr double model2_dstar_frobenius = 3.36, model2_dstar_frobenius_sd = 2.53;
constexpr double band_sds = 3.0;

constexpr std::size_t bench_p = 100, bench_n = 50, bench_reps = 20;
constexpr std::uint64_t bench_seed = 1;

constexpr double size_lo = 0.005, size_hi = 0.12;
constexpr double power_min = 0.90;
constexpr double oracle_tol = 1e-10;
constexpr double invariance_tol = 1e-10;
constexpr double closed_form_tol = 1e-10;

// -log(8 pi) - 2 log log(1 / 0.95), evaluated with 50-digit arithmetic.
constexpr double tau_005_reference = 2.71621907055509301584;

struct Verdict {
    bool pass;
    std::string detail;
};

std::string fmt(double v, int digits = 3) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

bool within(double value, double center, double sd, std::string& detail, const std::string& label) {
    const double lo = center - band_sds * sd, hi = center + band_sds * sd;
    const bool ok = value >= lo && value <= hi;
    detail += label + " " + fmt(value) + " in [" + fmt(lo) + ", " + fmt(hi) + "]" + (ok ? "" : " (out)") + "; ";
    return ok;
}

BenchmarkReport level_benchmark(ModelKind model) {
    BenchmarkConfig cfg;
    cfg.model = model;
    cfg.sizes = {{bench_p, bench_n, bench_n}};
    cfg.reps = bench_reps;
    cfg.seed = bench_seed;
    cfg.estimators = {BenchmarkEstimator::diff_corr, BenchmarkEstimator::cov_then_normalize,
                      BenchmarkEstimator::sample_difference};
    return run_benchmark(cfg);
}

double cell_mean(const BenchmarkReport& r, BenchmarkEstimator e, RuleKind rule, LossNorm norm, const SampleSize& s) {
    const auto* c = r.find(e, rule, norm, s);
    return c ? c->mean : std::nan("");
}

Verdict criterion1(const BenchmarkReport& m1) {
    const SampleSize s{bench_p, bench_n, bench_n};
    std::string d;
    bool ok = within(cell_mean(m1, BenchmarkEstimator::diff_corr, RuleKind::hard, LossNorm::spectral, s),
                     model1_dstar_spectral, model1_dstar_spectral_sd, d, "D* spectral");
    ok &= within(cell_mean(m1, BenchmarkEstimator::sample_difference, RuleKind::hard, LossNorm::spectral, s),
                 model1_sample_spectral, model1_sample_spectral_sd, d, "sample difference spectral");
    return {ok, d};
}

Verdict criterion2(const BenchmarkReport& m2) {
    const SampleSize s{bench_p, bench_n, bench_n};
    std::string d;
    bool ok = within(cell_mean(m2, BenchmarkEstimator::diff_corr, RuleKind::hard, LossNorm::spectral, s),
                     model2_dstar_spectral, model2_dstar_spectral_sd, d, "D* spectral");
    ok &= within(cell_mean(m2, BenchmarkEstimator::diff_corr, RuleKind::hard, LossNorm::frobenius, s),
                 model2_dstar_frobenius, model2_dstar_frobenius_sd, d, "D* Frobenius");
    return {ok, d};
}

// D* beats both competitors in every norm, for both thresholding rules of the benchmark.
Verdict criterion3(const BenchmarkReport& m1, const BenchmarkReport& m2) {
    const SampleSize s{bench_p, bench_n, bench_n};
    bool ok = true;
    std::string d;
    std::size_t comparisons = 0;
    for (const auto* rep : {&m1, &m2}) {
        const std::string model = rep == &m1 ? "model1" : "model2";
        for (RuleKind rule : {RuleKind::hard, RuleKind::adaptive_lasso}) {
            for (LossNorm norm : all_norms) {
                const double dstar = cell_mean(*rep, BenchmarkEstimator::diff_corr, rule, norm, s);
                for (auto other : {BenchmarkEstimator::cov_then_normalize, BenchmarkEstimator::sample_difference}) {
                    const double o = cell_mean(*rep, other, rule, norm, s);
                    ++comparisons;
                    if (!(dstar < o)) {
                        ok = false;
                        d += model + "/" + to_string(ThresholdRule{rule}) + "/" + to_string(norm) + ": D* " +
                             fmt(dstar) + " >= " + to_string(other) + " " + fmt(o) + "; ";
                    }
                }
            }
        }
    }
    if (ok) {
        d = std::to_string(comparisons) + " strict comparisons hold";
    }
    return {ok, d};
}

Verdict criterion4() {
    BenchmarkConfig cfg;
    cfg.model = ModelKind::model2;
    cfg.sizes = {{bench_p, 50, 50}, {bench_p, 500, 500}};
    cfg.reps = bench_reps;
    cfg.seed = bench_seed;
    cfg.rules = {ThresholdRule::hard()};
    cfg.estimators = {BenchmarkEstimator::diff_corr};
    const auto r = run_benchmark(cfg);
    const double small = cell_mean(r, BenchmarkEstimator::diff_corr, RuleKind::hard, LossNorm::spectral, cfg.sizes[0]);
    const double large = cell_mean(r, BenchmarkEstimator::diff_corr, RuleKind::hard, LossNorm::spectral, cfg.sizes[1]);
    return {large < small, "spectral loss n=500 " + fmt(large) + " vs n=50 " + fmt(small)};
}

double rejection_rate(const Matrix& r1, const Matrix& r2, std::size_t n, std::size_t reps, std::uint64_t stream) {
    const SquareSymMatrix s1(r1), s2(r2);
    std::size_t rejections = 0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
        const TwoGroupDataset ds(mvn_sample(s1, n, derive_seed(stream, {rep, 1})),
                                 mvn_sample(s2, n, derive_seed(stream, {rep, 2})));
        rejections += equality_test(ds, 0.05).reject ? 1 : 0;
    }
    return static_cast<double>(rejections) / static_cast<double>(reps);
}

Verdict criterion5() {
    const Matrix id = Matrix::Identity(50, 50);
    const double rate = rejection_rate(id, id, 100, 200, 5);
    return {rate >= size_lo && rate <= size_hi,
            "rejection rate " + fmt(rate) + " in [" + fmt(size_lo) + ", " + fmt(size_hi) + "]"};
}

Verdict criterion6() {
    Matrix r1 = Matrix::Identity(50, 50);
    r1(0, 1) = r1(1, 0) = 0.6;
    const double rate = rejection_rate(r1, Matrix::Identity(50, 50), 200, 100, 6);
    return {rate >= power_min, "rejection rate " + fmt(rate) + " >= " + fmt(power_min)};
}

// Every estimator and the test statistic against the naive loops on random small instances.
Verdict criterion7() {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> pick_p(3, 6), pick_n(10, 25);
    std::uniform_real_distribution<double> pick_tau(0.2, 2.0), pick_shared(0.0, 1.5);
    double worst = 0.0;
    std::string worst_where = "none";
    auto track = [&](double diff, const std::string& what) {
        if (!(diff <= worst)) {
            worst = diff;
            worst_where = what;
        }
    };
    for (std::uint64_t inst = 0; inst < 50; ++inst) {
        const std::size_t p = pick_p(rng), n1 = pick_n(rng), n2 = pick_n(rng);
        const double tau = pick_tau(rng), tau2 = pick_tau(rng);
        const TwoGroupDataset ds(SampleMatrix(testutil::gaussian(n1, p, 100 + inst, pick_shared(rng))),
                                 SampleMatrix(testutil::gaussian(n2, p, 500 + inst, pick_shared(rng))));
        const auto x1 = testutil::mat(ds.group1()), x2 = testutil::mat(ds.group2());
        const std::string tag = "instance " + std::to_string(inst) + " ";
        for (const auto& rule : testutil::all_rules()) {
            const auto k = testutil::to_oracle(rule.kind);
            const auto dc = oracle::diff_corr(x1, x2, tau, k);
            track(oracle::max_abs_diff(dc, estimate_diff_corr(ds, tau, rule).estimate), tag + "diff-corr");
            track(oracle::max_abs_diff(oracle::single_corr(x1, tau, k), estimate_single_corr(ds.group1(), tau, rule).estimate),
                  tag + "single corr");
            track(oracle::max_abs_diff(oracle::diff_cov(x1, x2, tau, k), estimate_diff_cov(ds, tau, rule).estimate),
                  tag + "diff-cov");
            const std::size_t split = 1 + inst % (p - 1);
            const auto cross = estimate_cross_corr(ds, split, tau, rule).estimate;
            double cross_diff = 0.0;
            for (std::size_t i = 0; i < split; ++i) {
                for (std::size_t j = split; j < p; ++j) {
                    cross_diff = std::max(cross_diff, std::abs(dc[i][j] - cross(static_cast<Eigen::Index>(i),
                                                                                 static_cast<Eigen::Index>(j - split))));
                }
            }
            track(cross_diff, tag + "cross");
            track(oracle::max_abs_diff(oracle::cov_then_normalize(x1, x2, tau, tau2, k),
                                       baseline_cov_then_normalize(ds, tau, tau2, rule).estimate),
                  tag + "cov-then-normalize");
            track(oracle::max_abs_diff(oracle::separate_corr(x1, x2, tau, tau2, k),
                                       baseline_separate_corr(ds, tau, tau2, rule).estimate),
                  tag + "separate corr");
        }
        track(oracle::max_abs_diff(oracle::sample_difference(x1, x2), baseline_sample_difference(ds).estimate),
              tag + "sample difference");
        const auto o = oracle::test_statistic(x1, x2);
        const auto st = test_statistic(ds);
        const double scale = 1.0 + std::abs(o.t_n);
        track(oracle::max_abs_diff(o.t_ij, st.t_ij.values()) / scale, tag + "T_ij (relative)");
        track(std::abs(o.t_n - st.t_n) / scale, tag + "T_n (relative)");
    }
    std::ostringstream os;
    os << "50 instances, worst deviation " << std::scientific << std::setprecision(2) << worst << " at " << worst_where;
    return {worst <= oracle_tol, os.str()};
}

struct PropertyLog {
    bool ok = true;
    std::string failures;
    std::size_t checks = 0;
    void check(bool cond, const std::string& what) {
        ++checks;
        if (!cond && failures.size() < 400) {
            failures += what + "; ";
        }
        ok &= cond;
    }
};

void rule_conditions(PropertyLog& log) {
    std::vector<double> zs, ls;
    for (int i = 0; i <= 240; ++i) {
        zs.push_back(-3.0 + 6.0 * i / 240);
    }
    for (int i = 0; i <= 60; ++i) {
        ls.push_back(3.0 * i / 60);
    }
    bool c1 = true, c2 = true, c3 = true;
    for (const auto& r : testutil::all_rules()) {
        // Soft satisfies the boundedness condition with constant 1, adaptive lasso with constant eta.
        const double c = r.kind == RuleKind::soft ? 1.0 : r.eta;
        for (double l : ls) {
            for (double z : zs) {
                const double s = apply_rule(r, z, l);
                c2 &= std::abs(z) > l || s == 0.0;
                c3 &= std::abs(s - z) <= l + 1e-15;
                if (r.kind != RuleKind::hard) {
                    for (double y : zs) {
                        c1 &= std::abs(z - y) > l || std::abs(s) <= c * std::abs(y) + 1e-12;
                    }
                }
            }
        }
    }
    log.check(c1, "C1 boundedness");
    log.check(c2, "C2 kills below threshold");
    log.check(c3, "C3 bounded shift");
}

double max_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

void invariances(PropertyLog& log) {
    const std::vector<Eigen::Index> perm{4, 2, 0, 5, 1, 3};
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Matrix x1 = testutil::gaussian(30, 6, seed, 1.0), x2 = testutil::gaussian(35, 6, seed + 40, 0.3);
        const TwoGroupDataset ds{SampleMatrix(x1), SampleMatrix(x2)};
        const std::string tag = " seed " + std::to_string(seed);

        const auto m = compute_moments(ds.group1());
        const Matrix a1 = testutil::affine_columns(x1, seed), a2 = testutil::affine_columns(x2, seed + 3);
        const auto ma = compute_moments(SampleMatrix(a1));
        log.check(max_diff(m.r_hat.values(), ma.r_hat.values()) <= invariance_tol, "moments r scale" + tag);
        log.check(max_diff(m.xi_hat.values(), ma.xi_hat.values()) <= invariance_tol, "moments xi scale" + tag);
        Matrix shifted = x1;
        shifted.rowwise() += Eigen::RowVectorXd::LinSpaced(6, -40.0, 40.0);
        const auto ms = compute_moments(SampleMatrix(shifted));
        log.check(max_diff(m.sigma_hat.values(), ms.sigma_hat.values()) <= invariance_tol, "covariance shift" + tag);
        log.check(max_diff(m.theta_hat.values(), ms.theta_hat.values()) <= invariance_tol, "theta shift" + tag);

        const TwoGroupDataset ads{SampleMatrix(a1), SampleMatrix(a2)};
        const TwoGroupDataset pds{SampleMatrix(testutil::permute_columns(x1, perm)),
                                  SampleMatrix(testutil::permute_columns(x2, perm))};
        for (const auto& rule : testutil::all_rules()) {
            const Matrix d = estimate_diff_corr(ds, 1.0, rule).estimate;
            log.check(max_diff(d, estimate_diff_corr(ads, 1.0, rule).estimate) <= invariance_tol,
                      "diff-corr affine " + to_string(rule) + tag);
            log.check(max_diff(testutil::permute_square(d, perm), estimate_diff_corr(pds, 1.0, rule).estimate) <=
                          invariance_tol,
                      "diff-corr permutation " + to_string(rule) + tag);
        }
        const Matrix t = test_statistic(ds).t_ij.values();
        const double scale = 1.0 + t.maxCoeff();
        log.check(max_diff(t, test_statistic(ads).t_ij.values()) <= invariance_tol * scale, "T_ij affine" + tag);
        log.check(max_diff(testutil::permute_square(t, perm), test_statistic(pds).t_ij.values()) <= invariance_tol * scale,
                  "T_ij permutation" + tag);
    }
}

void monotone_support(PropertyLog& log) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto ds = draw_replicate(ModelKind::model2, {30, 40, 40}, seed).data;
        for (const auto& rule : testutil::all_rules()) {
            std::size_t prev = std::numeric_limits<std::size_t>::max();
            bool mono = true;
            for (double tau : tau_grid(10)) {
                const std::size_t nz = estimate_diff_corr(ds, tau, rule).nonzero_count();
                mono &= nz <= prev;
                prev = nz;
            }
            log.check(mono, "support monotone " + to_string(rule) + " seed " + std::to_string(seed));
        }
    }
}

void cv_determinism(PropertyLog& log) {
    const auto ds = draw_replicate(ModelKind::model2, {20, 50, 50}, 3).data;
    CvConfig cfg;
    cfg.seed = 11;
    cfg.threads = 1;
    const auto a = cv_select_tau(ds, cfg, EstimatorKind::diff_corr);
    const auto b = cv_select_tau(ds, cfg, EstimatorKind::diff_corr);
    cfg.threads = 4;
    const auto c = cv_select_tau(ds, cfg, EstimatorKind::diff_corr);
    log.check(a.losses == b.losses && a.tau_hat == b.tau_hat, "CV repeatable");
    log.check(a.losses == c.losses && a.tau_hat == c.tau_hat, "CV thread independent");
}

void norm_inequalities(PropertyLog& log) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 100; ++rep) {
        const Eigen::Index p = 2 + rep % 12;
        Matrix m(p, p);
        for (Eigen::Index i = 0; i < p; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                m(i, j) = m(j, i) = z(rng);
            }
        }
        const double s = spectral_norm(m);
        log.check(s <= matrix_l1_norm(m) * (1 + 1e-12), "spectral <= l1");
        log.check(s <= frobenius_norm(m) * (1 + 1e-12), "spectral <= Frobenius");
    }
}

Verdict criterion8() {
    PropertyLog log;
    rule_conditions(log);
    invariances(log);
    monotone_support(log);
    cv_determinism(log);
    norm_inequalities(log);
    return {log.ok, std::to_string(log.checks) + " property checks" + (log.ok ? " hold" : ", failing: " + log.failures)};
}

Verdict criterion9() {
    const long double pi = std::numbers::pi_v<long double>;
    const long double direct = -std::log(8.0L * pi) - 2.0L * std::log(std::log(1.0L / 0.95L));
    const double tau = decide_test(0.0, 100, 0.05).tau_alpha;
    const double err_ref = std::abs(tau - tau_005_reference);
    const double err_direct = std::abs(static_cast<long double>(tau) - direct);
    double worst_boundary = 0.0;
    for (std::size_t p : {3u, 10u, 100u, 1000u, 100000u}) {
        for (double alpha : {0.001, 0.01, 0.05, 0.1, 0.5}) {
            const auto d = decide_test(0.0, p, alpha);
            worst_boundary = std::max(worst_boundary, std::abs(extreme_value_pvalue(d.critical_value, p) - alpha));
        }
    }
    std::ostringstream os;
    os << "tau_0.05 = " << std::setprecision(17) << tau << ", |error| " << std::scientific << std::setprecision(2)
       << std::max(err_ref, static_cast<double>(err_direct)) << "; boundary p-value error " << worst_boundary;
    return {err_ref <= closed_form_tol && err_direct <= closed_form_tol && worst_boundary <= closed_form_tol, os.str()};
}

} // namespace

int main() {
    bool all = true;
    auto report = [&](int id, const std::function<Verdict()>& fn) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        all &= v.pass;
        std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << " | " << v.detail << " ("
                  << fmt(secs, 1) << " s)" << std::endl;
    };

    // The two model-level benchmarks feed criteria 1 to 3.
    std::optional<BenchmarkReport> m1, m2;
    auto bench = [&](std::optional<BenchmarkReport>& slot, ModelKind model) -> const BenchmarkReport& {
        if (!slot) {
            slot = level_benchmark(model);
        }
        return *slot;
    };
    report(1, [&] { return criterion1(bench(m1, ModelKind::model1)); });
    report(2, [&] { return criterion2(bench(m2, ModelKind::model2)); });
    report(3, [&] { return criterion3(bench(m1, ModelKind::model1), bench(m2, ModelKind::model2)); });
    report(4, criterion4);
    report(5, criterion5);
    report(6, criterion6);
    report(7, criterion7);
    report(8, criterion8);
    report(9, criterion9);
    std::cout << (all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL") << std::endl;
    return all ? 0 : 1;
}
