#ifndef DIFFCORR_CLI_HPP
#define DIFFCORR_CLI_HPP

#include "cross_validation.hpp"
#include "estimators.hpp"
#include "hypothesis_test.hpp"
#include "io.hpp"
#include "norms.hpp"
#include "simulation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

/**
 * @file cli.hpp
 * @brief Command-line front end: configuration, argument parsing and command dispatch.
 *
 * Exit status is 0 on success, 2 for USER errors, 3 for DATA errors and 4 for
 * INTERNAL errors.
 */

namespace diffcorr::cli {

inline constexpr int schema_version = 1;

enum class Command {
    estimate_diff_corr,
    estimate_corr,
    estimate_diff_cov,
    estimate_cross,
    test_equality,
    cv,
    simulate,
    support_rank
};

inline const char* command_name(Command c) {
    switch (c) {
    case Command::estimate_diff_corr: return "estimate-diff-corr";
    case Command::estimate_corr: return "estimate-corr";
    case Command::estimate_diff_cov: return "estimate-diff-cov";
    case Command::estimate_cross: return "estimate-cross";
    case Command::test_equality: return "test-equality";
    case Command::cv: return "cv";
    case Command::simulate: return "simulate";
    case Command::support_rank: return "support-rank";
    }
    return "unknown";
}

struct RunConfig {
    Command command = Command::estimate_diff_corr;

    std::string input1;
    std::string input2;
    std::string input;
    std::string label_column;
    std::string groups;

    /// Fixed tau; cross-validation runs when absent.
    std::optional<double> tau;
    std::string rule = "adaptive-lasso";
    double eta = 4.0;
    double alpha = 0.05;
    std::size_t cv_folds = 5;
    std::size_t cv_repeats = 5;
    std::size_t cv_grid = 50;
    std::uint64_t seed = 1;

    std::string out_matrix;
    std::string out_json;
    std::string out_ranking;
    std::string out_csv;
    std::size_t top_k = 20;

    /// X block size for estimate-cross.
    std::size_t split = 0;
    /// Estimator tuned by the cv command: diff-corr, diff-cov or cross.
    std::string estimator = "diff-corr";

    int model = 2;
    std::vector<std::size_t> p{100};
    std::size_t n1 = 50;
    std::size_t n2 = 50;
    std::size_t reps = 20;
    /// Rules for simulate; both table rules when empty and no --rule was given.
    std::vector<std::string> sim_rules;
};

/**
 * Registers every subcommand and flag. After app().parse(), finalize() records
 * which subcommand ran and applies flag-dependent defaults.
 */
class Parser {
public:
    explicit Parser(RunConfig& cfg) : cfg_(cfg), app_("Adaptive thresholding estimators and tests for differential correlation matrices") {
        app_.require_subcommand(1);
        struct Entry {
            Command cmd;
            const char* help;
        };
        const Entry entries[] = {
            {Command::estimate_diff_corr, "Estimate the differential correlation matrix R1 - R2"},
            {Command::estimate_corr, "Estimate a single sparse correlation matrix"},
            {Command::estimate_diff_cov, "Estimate the differential covariance matrix"},
            {Command::estimate_cross, "Estimate the differential cross-correlation block"},
            {Command::test_equality, "Test H0: R1 = R2 with the max-type statistic"},
            {Command::cv, "Cross-validate the thresholding constant"},
            {Command::simulate, "Run the Monte-Carlo benchmark on the simulation models"},
            {Command::support_rank, "Rank variables by the support size of the differential estimate"},
        };
        for (const auto& e : entries) {
            auto* sub = app_.add_subcommand(command_name(e.cmd), e.help);
            subs_.push_back({e.cmd, sub});
            if (e.cmd == Command::simulate) {
                add_simulate_flags(sub);
            } else {
                add_data_flags(sub, e.cmd);
            }
        }
    }

    CLI::App& app() { return app_; }

    void finalize() {
        for (const auto& [cmd, sub] : subs_) {
            if (sub->parsed()) {
                cfg_.command = cmd;
                if (cmd == Command::simulate && cfg_.sim_rules.empty() && sub->count("--rule") > 0) {
                    cfg_.sim_rules.push_back(cfg_.rule);
                }
            }
        }
    }

private:
    void add_data_flags(CLI::App* sub, Command cmd) {
        sub->add_option("--input1", cfg_.input1, "CSV of group 1 (header of labels, one observation per row)");
        sub->add_option("--input2", cfg_.input2, "CSV of group 2 with the same header");
        sub->add_option("--input", cfg_.input, "Single CSV with a label column holding both groups");
        sub->add_option("--label-column", cfg_.label_column, "Name of the group label column in --input");
        sub->add_option("--groups", cfg_.groups, "Group mapping such as 'A+B:C'");
        sub->add_option("--rule", cfg_.rule, "Thresholding rule: hard, soft or adaptive-lasso")
            ->check(CLI::IsMember({"hard", "soft", "adaptive-lasso"}));
        sub->add_option("--eta", cfg_.eta, "Adaptive lasso exponent (>= 1)");
        sub->add_option("--seed", cfg_.seed, "Seed for cross-validation splits");
        sub->add_option("--out-json", cfg_.out_json, "Write the JSON summary here instead of stdout");
        if (cmd == Command::test_equality) {
            sub->add_option("--alpha", cfg_.alpha, "Significance level");
            sub->add_option("--top", cfg_.top_k, "Number of largest pairwise statistics to report");
            return;
        }
        auto* tau = sub->add_option("--tau", cfg_.tau, "Fixed thresholding constant (disables cross-validation)");
        auto* folds = sub->add_option("--cv-folds", cfg_.cv_folds, "Cross-validation folds K");
        auto* repeats = sub->add_option("--cv-repeats", cfg_.cv_repeats, "Cross-validation random splits H");
        auto* grid = sub->add_option("--cv-grid", cfg_.cv_grid, "Grid resolution N on [0, 5]");
        tau->excludes(folds)->excludes(repeats)->excludes(grid);
        if (cmd == Command::cv) {
            tau->description("Not used by cv");
            sub->add_option("--estimator", cfg_.estimator, "Estimator to tune: diff-corr, diff-cov or cross")
                ->check(CLI::IsMember({"diff-corr", "diff-cov", "cross"}));
        }
        if (cmd == Command::estimate_cross || cmd == Command::cv) {
            sub->add_option("--split", cfg_.split, "Number of leading variables forming the X block");
        }
        sub->add_option("--out-matrix", cfg_.out_matrix, "Write the estimate as a labeled CSV matrix");
        if (cmd == Command::support_rank) {
            sub->add_option("--out-ranking", cfg_.out_ranking, "Write the (label, count) ranking CSV here");
        }
    }

    void add_simulate_flags(CLI::App* sub) {
        sub->add_option("--model", cfg_.model, "Simulation model (1 or 2)")->check(CLI::IsMember({1, 2}));
        sub->add_option("--p", cfg_.p, "Dimension(s)")->expected(1, -1);
        auto* n = sub->add_option_function<std::size_t>(
            "--n", [this](const std::size_t& v) { cfg_.n1 = cfg_.n2 = v; }, "Sample size of both groups");
        sub->add_option("--n1", cfg_.n1, "Sample size of group 1")->excludes(n);
        sub->add_option("--n2", cfg_.n2, "Sample size of group 2")->excludes(n);
        sub->add_option("--reps", cfg_.reps, "Replications (>= 2)");
        sub->add_option("--rule", cfg_.rule, "Single thresholding rule (default: hard and adaptive-lasso)")
            ->check(CLI::IsMember({"hard", "soft", "adaptive-lasso"}));
        sub->add_option("--seed", cfg_.seed, "Master seed");
        sub->add_option("--cv-folds", cfg_.cv_folds, "Cross-validation folds K");
        sub->add_option("--cv-repeats", cfg_.cv_repeats, "Cross-validation random splits H");
        sub->add_option("--cv-grid", cfg_.cv_grid, "Grid resolution N on [0, 5]");
        sub->add_option("--out-csv", cfg_.out_csv, "Write the report CSV here (the table then goes to stdout)");
        sub->add_option("--out-json", cfg_.out_json, "Write the JSON summary here");
    }

    RunConfig& cfg_;
    CLI::App app_;
    std::vector<std::pair<Command, CLI::App*>> subs_;
};

namespace detail {

using nlohmann::json;

inline TwoGroupDataset load_two_groups(const RunConfig& cfg) {
    if (!cfg.input1.empty() || !cfg.input2.empty()) {
        if (cfg.input1.empty() || cfg.input2.empty()) {
            throw ValidationError("--input1 and --input2 must be given together");
        }
        return ingest_two_group(cfg.input1, cfg.input2);
    }
    if (!cfg.input.empty()) {
        if (cfg.label_column.empty()) {
            throw ValidationError("--input needs --label-column to split the file into two groups");
        }
        std::optional<GroupSpec> spec;
        if (!cfg.groups.empty()) {
            spec = parse_group_spec(cfg.groups);
        }
        return ingest_labeled(cfg.input, cfg.label_column, spec);
    }
    throw ValidationError("no input: pass --input1/--input2 or --input with --label-column");
}

inline SampleMatrix load_one_group(const RunConfig& cfg) {
    if (!cfg.input1.empty()) {
        return read_sample_csv(cfg.input1);
    }
    if (!cfg.input.empty()) {
        return read_sample_csv(cfg.input);
    }
    throw ValidationError("no input: pass --input1 or --input");
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write '" + path + "'");
    }
    return out;
}

inline CvConfig cv_config(const RunConfig& cfg) {
    CvConfig cv;
    cv.k_folds = cfg.cv_folds;
    cv.h_repeats = cfg.cv_repeats;
    cv.grid_n = cfg.cv_grid;
    cv.seed = cfg.seed;
    cv.rule = parse_rule(cfg.rule, cfg.eta);
    cv.cross_split = cfg.split;
    cv.threads = worker_count();
    return cv;
}

inline json cv_json(const CvConfig& cv, const CvResult& res) {
    return json{{"k_folds", cv.k_folds}, {"h_repeats", cv.h_repeats}, {"grid_n", cv.grid_n},
                {"seed", cv.seed},       {"tau_hat", res.tau_hat},   {"grid", res.grid},
                {"losses", res.losses},  {"splits_used", res.splits_used}};
}

inline json estimate_json(const DifferentialEstimate& est) {
    const std::size_t nonzero = est.nonzero_count();
    json j{{"tau", est.tau},
           {"rows", est.estimate.rows()},
           {"cols", est.estimate.cols()},
           {"nonzero_count", nonzero},
           {"norms",
            {{"spectral", spectral_norm(est.estimate)},
             {"l1", matrix_l1_norm(est.estimate)},
             {"frobenius", frobenius_norm(est.estimate)}}}};
    if (est.estimate.rows() == est.estimate.cols()) {
        j["nonzero_pairs"] = nonzero / 2;
    }
    return j;
}

inline void emit_json(const RunConfig& cfg, const json& summary, std::ostream& out) {
    if (cfg.out_json.empty()) {
        out << summary.dump(2) << '\n';
    } else {
        auto f = open_output(cfg.out_json);
        f << summary.dump(2) << '\n';
    }
}

inline json base_summary(const RunConfig& cfg) {
    return json{{"schema_version", schema_version}, {"command", command_name(cfg.command)}};
}

inline void write_ranking(std::ostream& out, const std::vector<SupportEntry>& ranking) {
    out << "label,count\n";
    for (const auto& e : ranking) {
        out << e.label << ',' << e.count << '\n';
    }
}

inline int run_estimate(const RunConfig& cfg, std::ostream& out) {
    const auto rule = parse_rule(cfg.rule, cfg.eta);
    auto cv = cv_config(cfg);
    json summary = base_summary(cfg);
    summary["rule"] = to_string(rule);
    if (rule.kind == RuleKind::adaptive_lasso) {
        summary["eta"] = rule.eta;
    }
    summary["tau_source"] = cfg.tau ? "fixed" : "cv";

    std::optional<DifferentialEstimate> est;
    std::optional<CvResult> cv_res;

    if (cfg.command == Command::estimate_corr) {
        const auto x = load_one_group(cfg);
        double tau = 0.0;
        if (cfg.tau) {
            tau = *cfg.tau;
        } else {
            cv_res = cv_select_tau(x, cv, SingleKind::correlation);
            tau = cv_res->tau_hat;
        }
        est = estimate_single_corr(x, tau, rule);
        summary["p"] = x.p();
        summary["n"] = x.n();
    } else {
        const auto ds = load_two_groups(cfg);
        const EstimatorKind kind = cfg.command == Command::estimate_diff_cov ? EstimatorKind::diff_cov
                                   : cfg.command == Command::estimate_cross  ? EstimatorKind::cross_corr
                                                                             : EstimatorKind::diff_corr;
        if (kind == EstimatorKind::cross_corr && (cfg.split < 1 || cfg.split >= ds.p())) {
            throw ValidationError("--split must satisfy 1 <= split < p (p = " + std::to_string(ds.p()) + ")");
        }
        double tau = 0.0;
        if (cfg.tau) {
            tau = *cfg.tau;
        } else {
            cv_res = cv_select_tau(ds, cv, kind);
            tau = cv_res->tau_hat;
        }
        switch (kind) {
        case EstimatorKind::diff_corr: est = estimate_diff_corr(ds, tau, rule); break;
        case EstimatorKind::diff_cov: est = estimate_diff_cov(ds, tau, rule); break;
        case EstimatorKind::cross_corr:
            est = estimate_cross_corr(ds, cfg.split, tau, rule);
            summary["split"] = cfg.split;
            break;
        }
        summary["p"] = ds.p();
        summary["n1"] = ds.group1().n();
        summary["n2"] = ds.group2().n();
    }

    summary["estimate"] = estimate_json(*est);
    summary["tau"] = est->tau;
    if (cv_res) {
        summary["cv"] = cv_json(cv, *cv_res);
    }

    if (!cfg.out_matrix.empty()) {
        auto f = open_output(cfg.out_matrix);
        write_matrix_csv(f, est->estimate, est->row_names, est->col_names);
    }
    if (cfg.command == Command::support_rank) {
        const auto ranking = support_ranking(*est);
        json top = json::array();
        for (std::size_t i = 0; i < ranking.size() && i < 10; ++i) {
            top.push_back({{"label", ranking[i].label}, {"count", ranking[i].count}});
        }
        summary["top_ranked"] = top;
        if (cfg.out_ranking.empty()) {
            write_ranking(out, ranking);
            if (cfg.out_json.empty()) {
                return 0;
            }
        } else {
            auto f = open_output(cfg.out_ranking);
            write_ranking(f, ranking);
        }
    }
    emit_json(cfg, summary, out);
    return 0;
}

inline int run_test(const RunConfig& cfg, std::ostream& out) {
    const auto ds = load_two_groups(cfg);
    const auto res = equality_test(ds, cfg.alpha);
    const auto top = top_pairs(res.t_ij, cfg.top_k);

    json summary = base_summary(cfg);
    summary["p"] = ds.p();
    summary["n1"] = ds.group1().n();
    summary["n2"] = ds.group2().n();
    json pairs = json::array();
    for (const auto& pr : top) {
        pairs.push_back({{"i", ds.names()[pr.i]}, {"j", ds.names()[pr.j]}, {"t_ij", pr.value}});
    }
    summary["test"] = json{{"t_n", res.t_n},
                           {"centered", res.centered},
                           {"p_value", res.p_value},
                           {"alpha", res.alpha},
                           {"tau_alpha", res.tau_alpha},
                           {"reject", res.reject},
                           {"top_pairs", pairs}};

    if (cfg.out_json.empty()) {
        out << std::setprecision(10);
        out << "T_n = " << res.t_n << "\n";
        out << "centered statistic = " << res.centered << "\n";
        out << "p-value = " << res.p_value << "\n";
        out << "decision at alpha = " << res.alpha << ": " << (res.reject ? "reject H0" : "accept H0") << "\n";
        out << "top pairs:\n";
        for (const auto& pr : top) {
            out << "  " << ds.names()[pr.i] << " - " << ds.names()[pr.j] << "  " << pr.value << "\n";
        }
    } else {
        emit_json(cfg, summary, out);
        out << "T_n = " << res.t_n << ", p-value = " << res.p_value << ", "
            << (res.reject ? "reject H0" : "accept H0") << "\n";
    }
    return 0;
}

inline int run_cv(const RunConfig& cfg, std::ostream& out) {
    auto cv = cv_config(cfg);
    json summary = base_summary(cfg);
    summary["rule"] = to_string(cv.rule);
    summary["estimator"] = cfg.estimator;
    CvResult res;
    if (cfg.estimator == "diff-corr") {
        res = cv_select_tau(load_two_groups(cfg), cv, EstimatorKind::diff_corr);
    } else if (cfg.estimator == "diff-cov") {
        res = cv_select_tau(load_two_groups(cfg), cv, EstimatorKind::diff_cov);
    } else if (cfg.estimator == "cross") {
        res = cv_select_tau(load_two_groups(cfg), cv, EstimatorKind::cross_corr);
    } else {
        throw ValidationError("unknown estimator '" + cfg.estimator + "'");
    }
    summary["cv"] = cv_json(cv, res);
    emit_json(cfg, summary, out);
    return 0;
}

inline int run_simulate(const RunConfig& cfg, std::ostream& out) {
    BenchmarkConfig bc;
    bc.model = cfg.model == 1 ? ModelKind::model1 : ModelKind::model2;
    bc.sizes.clear();
    for (auto p : cfg.p) {
        bc.sizes.push_back({p, cfg.n1, cfg.n2});
    }
    bc.reps = cfg.reps;
    if (!cfg.sim_rules.empty()) {
        bc.rules.clear();
        for (const auto& r : cfg.sim_rules) {
            bc.rules.push_back(parse_rule(r, cfg.eta));
        }
    }
    bc.seed = cfg.seed;
    bc.cv_folds = cfg.cv_folds;
    bc.cv_repeats = cfg.cv_repeats;
    bc.cv_grid = cfg.cv_grid;

    const auto report = run_benchmark(bc);
    if (cfg.out_csv.empty()) {
        write_report_csv(out, report);
    } else {
        auto f = open_output(cfg.out_csv);
        write_report_csv(f, report);
        write_report_table(out, report);
    }
    if (!cfg.out_json.empty()) {
        json summary = base_summary(cfg);
        summary["model"] = to_string(bc.model);
        summary["replications"] = report.replications;
        summary["seed"] = report.seed;
        summary["cells"] = report.cells.size();
        summary["dropped"] = report.dropped;
        emit_json(cfg, summary, out);
    }
    return 0;
}

} // namespace detail

inline int exit_code(ErrorCategory c) {
    switch (c) {
    case ErrorCategory::user: return 2;
    case ErrorCategory::data: return 3;
    case ErrorCategory::internal: return 4;
    }
    return 4;
}

/// Executes one command. Results go to out, categorized errors to err.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        switch (cfg.command) {
        case Command::test_equality: return detail::run_test(cfg, out);
        case Command::cv: return detail::run_cv(cfg, out);
        case Command::simulate: return detail::run_simulate(cfg, out);
        default: return detail::run_estimate(cfg, out);
        }
    } catch (const Error& e) {
        err << "error [" << to_string(e.category()) << "]: " << e.what() << '\n';
        return exit_code(e.category());
    } catch (const std::exception& e) {
        err << "error [INTERNAL]: " << e.what() << '\n';
        return exit_code(ErrorCategory::internal);
    }
}

/// Parses argv and runs. CLI11 usage errors are USER errors.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    RunConfig cfg;
    Parser parser(cfg);
    try {
        parser.app().parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return parser.app().exit(e, out, err);
        }
        err << "error [USER]: " << e.what() << '\n';
        return exit_code(ErrorCategory::user);
    }
    parser.finalize();
    return run(cfg, out, err);
}

} // namespace diffcorr::cli

#endif
