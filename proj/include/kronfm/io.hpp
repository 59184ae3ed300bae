// SPDX-License-Identifier: MIT
#pragma once

#include "kronfm/dgp.hpp"

#include <string>
#include <vector>

namespace kronfm {

/// Series file format (UTF-8 text):
///   line 1:      K d_1 ... d_K T
///   lines 2..T+1: prod(d_k) decimal floats in canonical order
/// Values survive a write/read round trip exactly (17 significant
/// digits on output).
TensorSeries read_series(const std::string& path);
void write_series(const TensorSeries& series, const std::string& path);

/// Market-effect removal by least squares on a scalar return series:
/// beta = sum_t (r_t - rbar)(vec(X_t) - vec(Xbar)) / sum_t (r_t - rbar)^2,
/// residual_t = vec(X_t) - vec(Xbar) - (r_t - rbar) beta, refolded.
struct CapmResult {
    VectorXd beta_hat;
    TensorSeries residuals;
    VectorXd mean_series;  // vec(Xbar)
    double mean_market = 0.0;
};
CapmResult capm_residuals(const TensorSeries& x, const std::vector<double>& market);

/// Whitespace- or comma-separated list of T reals.
std::vector<double> read_market(const std::string& path, Index expected_len);

/// Report rendering: UTF-8 key=value lines, one statistic per line,
/// deterministic key order, floats with 6 significant digits.
std::string format_g6(double v);
std::string render_test_report(const TestReport& report);
std::string render_test_reports(const std::vector<TestReport>& reports);
std::string render_scan_report(const ScanReport& scan);
std::string render_scan_reports(const std::vector<double>& alphas,
                                const std::vector<ScanReport>& by_alpha);
std::string render_sim_result(const DgpConfig& config, int reps,
                              const SimResult& result);
std::string render_sim_table(const SimResult& result);
std::string render_scan_sim_result(const DgpConfig& config, int reps, int r_vec,
                                   const ScanSimResult& result);
std::string render_scan_sim_table(const ScanSimResult& result);
std::string render_capm_report(const CapmResult& result);

/// Write atomically: to `path` + ".tmp", then rename.
void write_text_file(const std::string& path, const std::string& content);

/// Flat key=value simulation config (comments with '#', blank lines
/// ignored). Returns the config plus harness settings.
struct SimulateJob {
    DgpConfig config;
    int reps = 500;
    std::vector<double> alphas{0.01, 0.05};
    int threads = 0;
    bool scan = false;
    int r_vec = 0;  // 0 = product of ranks
};
SimulateJob parse_simulate_config(const std::string& path);

}  // namespace kronfm
