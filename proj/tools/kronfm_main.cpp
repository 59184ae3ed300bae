// SPDX-License-Identifier: MIT
#include "kronfm/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace kronfm;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parse "v..K" or "a,b,c" (1-based) into a 0-based ascending list.
std::vector<int> parse_mode_set(const std::string& text) {
    std::vector<int> modes;
    size_t dots = text.find("..");
    try {
        if (dots != std::string::npos) {
            int lo = std::stoi(text.substr(0, dots));
            int hi = std::stoi(text.substr(dots + 2));
            for (int m = lo; m <= hi; ++m) modes.push_back(m - 1);
        } else {
            std::string tok;
            for (char c : text + ",") {
                if (c == ',') {
                    if (!tok.empty()) modes.push_back(std::stoi(tok) - 1);
                    tok.clear();
                } else {
                    tok.push_back(c);
                }
            }
        }
    } catch (const std::exception&) {
        throw UsageError("cannot parse mode set '" + text + "'");
    }
    if (modes.empty()) throw UsageError("empty mode set '" + text + "'");
    return modes;
}

std::vector<int> parse_rank_list(const std::string& text) {
    std::vector<int> out;
    std::string tok;
    try {
        for (char c : text + ",") {
            if (c == ',') {
                if (!tok.empty()) out.push_back(std::stoi(tok));
                tok.clear();
            } else {
                tok.push_back(c);
            }
        }
    } catch (const std::exception&) {
        throw UsageError("cannot parse rank list '" + text + "'");
    }
    return out;
}

void emit(const std::string& report, const std::string& out_path) {
    if (out_path.empty())
        std::cout << report;
    else
        write_text_file(out_path, report);
}

int run_test(const std::string& data_path, const std::string& mode_set_text,
             const std::string& pre_ranks_text, int r_v,
             const std::vector<double>& alphas, const std::string& out_path) {
    TensorSeries y = read_series(data_path);
    std::vector<int> modes = parse_mode_set(mode_set_text);
    ModeSet mode_set(modes, static_cast<int>(y.dims.size()));
    std::vector<int> pre_ranks =
        pre_ranks_text.empty() ? std::vector<int>{} : parse_rank_list(pre_ranks_text);
    if (static_cast<int>(pre_ranks.size()) !=
        mode_set.order() - mode_set.count())
        throw UsageError("--pre-ranks must list one rank per unmerged mode");

    RankSpec spec{mode_set, pre_ranks, r_v};
    AggStats stats = compute_agg_stats(y, spec);
    std::vector<TestReport> reports;
    for (double alpha : alphas) reports.push_back(decide(stats, alpha));
    emit(render_test_reports(reports), out_path);
    return 0;
}

int run_scan(const std::string& data_path, int r_vec,
             const std::vector<double>& alphas, const std::string& out_path) {
    TensorSeries y = read_series(data_path);
    std::vector<ScanReport> by_alpha;
    for (double alpha : alphas) by_alpha.push_back(scan_modes(y, r_vec, alpha));
    emit(render_scan_reports(alphas, by_alpha), out_path);
    return 0;
}

int run_capm(const std::string& data_path, const std::string& market_path,
             const std::string& out_path) {
    TensorSeries x = read_series(data_path);
    std::vector<double> market = read_market(market_path, x.length());
    CapmResult result = capm_residuals(x, market);
    write_series(result.residuals, out_path);
    std::cout << render_capm_report(result);
    return 0;
}

int run_reshape(const std::string& data_path, const std::string& modes_text,
                const std::string& out_path) {
    TensorSeries y = read_series(data_path);
    std::vector<int> modes = parse_mode_set(modes_text);
    TensorSeries out = reshape(y, ModeSet(modes, static_cast<int>(y.dims.size())));
    write_series(out, out_path);
    return 0;
}

int run_simulate(const std::string& config_path, const std::string& out_dir,
                 int threads_override) {
    SimulateJob job = parse_simulate_config(config_path);
    if (threads_override >= 0) job.threads = threads_override;
    std::filesystem::create_directories(out_dir);
    if (job.scan) {
        int r_vec = job.r_vec;
        if (r_vec <= 0) {
            r_vec = 1;
            for (int r : job.config.ranks) r_vec *= r;
        }
        ScanSimResult result = scan_monte_carlo(job.config, job.reps, job.alphas,
                                                r_vec, job.threads);
        write_text_file(out_dir + "/simresult.txt",
                        render_scan_sim_result(job.config, job.reps, r_vec, result));
        write_text_file(out_dir + "/table.txt", render_scan_sim_table(result));
        std::cout << render_scan_sim_table(result);
    } else {
        SimResult result = monte_carlo(job.config, job.reps, job.alphas,
                                       job.threads);
        write_text_file(out_dir + "/simresult.txt",
                        render_sim_result(job.config, job.reps, result));
        write_text_file(out_dir + "/table.txt", render_sim_table(result));
        std::cout << render_sim_table(result);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kronecker product structure tests for tensor factor models"};
    app.require_subcommand(1);

    std::string data_path, out_path, mode_set_text, pre_ranks_text;
    std::string market_path, config_path, modes_text;
    std::vector<double> alphas;
    int r_v = 0, r_vec = 0, threads = -1;

    CLI::App* cmd_test = app.add_subcommand(
        "test", "Test the Kronecker product structure along a mode set");
    cmd_test->add_option("--data", data_path, "series file")->required();
    cmd_test->add_option("--mode-set", mode_set_text,
                         "modes to merge, e.g. 2..3 or 2,3 (1-based)")
        ->required();
    cmd_test->add_option("--pre-ranks", pre_ranks_text,
                         "comma list of ranks for the unmerged modes");
    cmd_test->add_option("--r-v", r_v, "rank of the merged mode")->required();
    cmd_test->add_option("--alpha", alphas, "nominal level (repeatable)")
        ->required();
    cmd_test->add_option("--out", out_path, "report file (default stdout)");

    CLI::App* cmd_scan =
        app.add_subcommand("scan", "Scan every mode for lost structure");
    cmd_scan->add_option("--data", data_path, "series file")->required();
    cmd_scan->add_option("--r-vec", r_vec, "factor count of the vectorized series")
        ->required();
    cmd_scan->add_option("--alpha", alphas, "nominal level (repeatable)")
        ->required();
    cmd_scan->add_option("--out", out_path, "report file (default stdout)");

    CLI::App* cmd_capm = app.add_subcommand(
        "capm", "Remove the market effect from a series by least squares");
    cmd_capm->add_option("--data", data_path, "series file")->required();
    cmd_capm->add_option("--market", market_path, "file with T market returns")
        ->required();
    cmd_capm->add_option("--out", out_path, "residual series file")->required();

    CLI::App* cmd_reshape =
        app.add_subcommand("reshape", "Merge a set of modes into the last mode");
    cmd_reshape->add_option("--data", data_path, "series file")->required();
    cmd_reshape->add_option("--modes", modes_text, "modes to merge (1-based)")
        ->required();
    cmd_reshape->add_option("--out", out_path, "output series file")->required();

    CLI::App* cmd_sim =
        app.add_subcommand("simulate", "Monte Carlo study from a config file");
    cmd_sim->add_option("--config", config_path, "key=value config file")
        ->required();
    cmd_sim->add_option("--out", out_path, "output directory")->required();
    cmd_sim->add_option("--threads", threads, "worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (cmd_test->parsed())
            return run_test(data_path, mode_set_text, pre_ranks_text, r_v, alphas,
                            out_path);
        if (cmd_scan->parsed()) return run_scan(data_path, r_vec, alphas, out_path);
        if (cmd_capm->parsed()) return run_capm(data_path, market_path, out_path);
        if (cmd_reshape->parsed())
            return run_reshape(data_path, modes_text, out_path);
        if (cmd_sim->parsed()) return run_simulate(config_path, out_path, threads);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
