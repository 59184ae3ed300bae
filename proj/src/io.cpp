// SPDX-License-Identifier: MIT
#include "kronfm/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kronfm {

namespace {

std::runtime_error parse_error(const std::string& path, Index line,
                               const std::string& what) {
    return std::runtime_error(path + ": line " + std::to_string(line) + ": " +
                              what);
}

double parse_double(const std::string& token, const std::string& path,
                    Index line) {
    size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(token, &used);
    } catch (const std::exception&) {
        throw parse_error(path, line, "non-numeric token '" + token + "'");
    }
    if (used != token.size())
        throw parse_error(path, line, "non-numeric token '" + token + "'");
    return v;
}

std::vector<std::string> split_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\r' || c == ',' || c == '\n') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string join_ints(const std::vector<Index>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

}  // namespace

TensorSeries read_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open series file " + path);

    std::string line;
    if (!std::getline(in, line))
        throw parse_error(path, 1, "malformed header: empty file");
    std::vector<std::string> tokens = split_tokens(line);
    if (tokens.size() < 3)
        throw parse_error(path, 1,
                          "malformed header: need 'K d_1 ... d_K T'");
    long order = 0;
    try {
        order = std::stol(tokens[0]);
    } catch (const std::exception&) {
        throw parse_error(path, 1, "malformed header: bad order field");
    }
    if (order < 1 || tokens.size() != static_cast<size_t>(order) + 2)
        throw parse_error(path, 1,
                          "malformed header: expected " + std::to_string(order) +
                              " extents plus length");
    std::vector<Index> dims;
    Index total = 1;
    for (long k = 0; k < order; ++k) {
        long d = 0;
        try {
            d = std::stol(tokens[static_cast<size_t>(k) + 1]);
        } catch (const std::exception&) {
            throw parse_error(path, 1, "malformed header: bad extent field");
        }
        if (d < 1) throw parse_error(path, 1, "malformed header: extent < 1");
        dims.push_back(d);
        total *= d;
    }
    long t_len = 0;
    try {
        t_len = std::stol(tokens.back());
    } catch (const std::exception&) {
        throw parse_error(path, 1, "malformed header: bad length field");
    }
    if (t_len < 1) throw parse_error(path, 1, "malformed header: length < 1");

    TensorSeries series = TensorSeries::zeros(dims, t_len);
    Index records = 0;
    for (Index t = 0; t < t_len; ++t) {
        if (!std::getline(in, line)) break;
        Index line_no = t + 2;
        std::vector<std::string> vals = split_tokens(line);
        if (static_cast<Index>(vals.size()) != total)
            throw parse_error(path, line_no,
                              "expected " + std::to_string(total) +
                                  " values, found " +
                                  std::to_string(vals.size()));
        for (Index i = 0; i < total; ++i)
            series.data(i, t) =
                parse_double(vals[static_cast<size_t>(i)], path, line_no);
        ++records;
    }
    if (records != t_len)
        throw std::runtime_error(path + ": expected " + std::to_string(t_len) +
                                 " records, found " + std::to_string(records));
    while (std::getline(in, line))
        if (!split_tokens(line).empty())
            throw std::runtime_error(path + ": found more than the declared " +
                                     std::to_string(t_len) + " records");
    return series;
}

void write_series(const TensorSeries& series, const std::string& path) {
    std::ostringstream out;
    out << series.dims.size();
    for (Index d : series.dims) out << ' ' << d;
    out << ' ' << series.length() << '\n';
    char buf[40];
    for (Index t = 0; t < series.length(); ++t) {
        for (Index i = 0; i < series.tensor_size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", series.data(i, t));
            if (i) out << ' ';
            out << buf;
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

std::vector<double> read_market(const std::string& path, Index expected_len) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open market file " + path);
    std::stringstream all;
    all << in.rdbuf();
    std::vector<std::string> tokens = split_tokens(all.str());
    if (static_cast<Index>(tokens.size()) != expected_len)
        throw std::runtime_error(path + ": expected " +
                                 std::to_string(expected_len) +
                                 " returns, found " +
                                 std::to_string(tokens.size()));
    std::vector<double> out;
    out.reserve(tokens.size());
    for (size_t i = 0; i < tokens.size(); ++i)
        out.push_back(parse_double(tokens[i], path, 1));
    return out;
}

CapmResult capm_residuals(const TensorSeries& x,
                          const std::vector<double>& market) {
    const Index t_len = x.length();
    if (t_len < 2)
        throw std::invalid_argument("capm_residuals: need at least 2 records");
    if (static_cast<Index>(market.size()) != t_len)
        throw std::invalid_argument("capm_residuals: market length mismatch");

    double rbar = 0.0;
    for (double r : market) rbar += r;
    rbar /= static_cast<double>(t_len);

    VectorXd xbar = x.data.rowwise().mean();

    double denom = 0.0;
    VectorXd numer = VectorXd::Zero(x.tensor_size());
    for (Index t = 0; t < t_len; ++t) {
        double dr = market[static_cast<size_t>(t)] - rbar;
        denom += dr * dr;
        numer += dr * (x.data.col(t) - xbar);
    }
    if (denom == 0.0)
        throw std::invalid_argument(
            "capm_residuals: constant market series (zero denominator)");

    CapmResult result;
    result.beta_hat = numer / denom;
    result.mean_series = xbar;
    result.mean_market = rbar;
    result.residuals = TensorSeries::zeros(x.dims, t_len);
    for (Index t = 0; t < t_len; ++t) {
        double dr = market[static_cast<size_t>(t)] - rbar;
        result.residuals.data.col(t) = x.data.col(t) - xbar - dr * result.beta_hat;
    }
    return result;
}

std::string format_g6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

namespace {

std::string combo_label(const DivisorCombo& combo) {
    std::string out;
    for (size_t i = 0; i < combo.pis.size(); ++i) {
        if (i) out += 'x';
        out += std::to_string(combo.pis[i]);
    }
    return out;
}

void append_decision_fields(std::ostringstream& out, const std::string& prefix,
                            const TestReport& r) {
    out << prefix << "k_star=" << r.k_star + 1 << '\n';
    out << prefix << "n_combos=" << r.combos.size() << '\n';
    for (size_t m = 0; m < r.combos.size(); ++m)
        out << prefix << "combo_" << m + 1 << '=' << combo_label(r.combos[m])
            << '\n';
    out << prefix << "alpha_hat=" << format_g6(r.alpha_hat) << '\n';
    out << prefix << "q_alpha_hat=" << format_g6(r.q_alpha_hat) << '\n';
    out << prefix << "p_hat=" << r.p_hat << '\n';
    out << prefix << "reject=" << (r.reject ? "true" : "false") << '\n';
}

}  // namespace

std::string render_test_report(const TestReport& r) {
    std::ostringstream out;
    out << "alpha=" << format_g6(r.alpha) << '\n';
    append_decision_fields(out, "", r);
    for (Index m = 0; m < r.exceed.rows(); ++m)
        for (Index j = 0; j < r.exceed.cols(); ++j)
            out << "exceed_m" << m + 1 << "_j" << j + 1 << '='
                << format_g6(r.exceed(m, j)) << '\n';
    return out.str();
}

std::string render_test_reports(const std::vector<TestReport>& reports) {
    std::string out;
    for (const TestReport& r : reports) out += render_test_report(r);
    return out;
}

std::string render_scan_report(const ScanReport& scan) {
    std::ostringstream out;
    out << "a_star_hat=";
    for (size_t i = 0; i < scan.a_star.size(); ++i) {
        if (i) out << ',';
        out << scan.a_star[i] + 1;
    }
    out << '\n';
    for (size_t k = 0; k < scan.per_mode.size(); ++k) {
        std::string prefix = "mode" + std::to_string(k + 1) + "_";
        append_decision_fields(out, prefix, scan.per_mode[k]);
    }
    return out.str();
}

std::string render_scan_reports(const std::vector<double>& alphas,
                                const std::vector<ScanReport>& by_alpha) {
    std::ostringstream out;
    for (size_t a = 0; a < by_alpha.size(); ++a) {
        out << "alpha=" << format_g6(alphas[a]) << '\n';
        out << render_scan_report(by_alpha[a]);
    }
    return out.str();
}

namespace {

void append_config_fields(std::ostringstream& out, const DgpConfig& config,
                          int reps) {
    out << "hypothesis=" << (config.hypothesis == Hypothesis::H0 ? "H0" : "H1")
        << '\n';
    out << "order=" << config.order() << '\n';
    out << "dims=" << join_ints(config.dims) << '\n';
    out << "t_len=" << config.t_len << '\n';
    out << "ranks=";
    for (size_t i = 0; i < config.ranks.size(); ++i)
        out << (i ? "," : "") << config.ranks[i];
    out << '\n';
    out << "mode_set=";
    for (size_t i = 0; i < config.mode_set.size(); ++i)
        out << (i ? "," : "") << config.mode_set[i] + 1;
    out << '\n';
    out << "innovation="
        << (config.innovation == Innovation::Gaussian ? "normal" : "t3") << '\n';
    out << "sparsity=" << format_g6(config.sparsity) << '\n';
    out << "noise_scale=" << format_g6(config.noise_scale) << '\n';
    out << "seed=" << config.seed << '\n';
    out << "reps=" << reps << '\n';
}

}  // namespace

std::string render_sim_result(const DgpConfig& config, int reps,
                              const SimResult& result) {
    std::ostringstream out;
    out << "procedure=test\n";
    append_config_fields(out, config, reps);
    out << "n_alphas=" << result.alphas.size() << '\n';
    for (size_t a = 0; a < result.alphas.size(); ++a) {
        out << "alpha_" << a + 1 << '=' << format_g6(result.alphas[a]) << '\n';
        out << "mean_alpha_hat_" << a + 1 << '='
            << format_g6(result.mean_alpha_hat[a]) << '\n';
        out << "mean_p_hat_" << a + 1 << '=' << format_g6(result.mean_p_hat[a])
            << '\n';
    }
    for (size_t rep = 0; rep < result.reports.size(); ++rep)
        for (size_t a = 0; a < result.alphas.size(); ++a) {
            const TestReport& r = result.reports[rep][a];
            out << "rep_" << rep + 1 << "_alpha_hat_" << a + 1 << '='
                << format_g6(r.alpha_hat) << '\n';
            out << "rep_" << rep + 1 << "_p_hat_" << a + 1 << '=' << r.p_hat
                << '\n';
        }
    return out.str();
}

std::string render_sim_table(const SimResult& result) {
    std::ostringstream out;
    char buf[64];
    out << "            ";
    for (double a : result.alphas) {
        std::snprintf(buf, sizeof buf, "  alpha=%-6g", a);
        out << buf;
    }
    out << '\n';
    out << "alpha_hat   ";
    for (double v : result.mean_alpha_hat) {
        std::snprintf(buf, sizeof buf, "  %-12.3f", v);
        out << buf;
    }
    out << '\n';
    out << "p_hat       ";
    for (double v : result.mean_p_hat) {
        std::snprintf(buf, sizeof buf, "  %-12.3f", v);
        out << buf;
    }
    out << '\n';
    return out.str();
}

std::string render_scan_sim_result(const DgpConfig& config, int reps, int r_vec,
                                   const ScanSimResult& result) {
    std::ostringstream out;
    out << "procedure=scan\n";
    append_config_fields(out, config, reps);
    out << "r_vec=" << r_vec << '\n';
    out << "n_alphas=" << result.alphas.size() << '\n';
    for (size_t a = 0; a < result.alphas.size(); ++a) {
        out << "alpha_" << a + 1 << '=' << format_g6(result.alphas[a]) << '\n';
        for (Index k = 0; k < result.fraction.rows(); ++k)
            out << "fraction_mode" << k + 1 << '_' << a + 1 << '='
                << format_g6(result.fraction(k, static_cast<Index>(a))) << '\n';
    }
    for (size_t rep = 0; rep < result.reports.size(); ++rep)
        for (size_t a = 0; a < result.alphas.size(); ++a) {
            out << "rep_" << rep + 1 << "_a_star_" << a + 1 << '=';
            const ScanReport& s = result.reports[rep][a];
            for (size_t i = 0; i < s.a_star.size(); ++i) {
                if (i) out << ',';
                out << s.a_star[i] + 1;
            }
            out << '\n';
        }
    return out.str();
}

std::string render_scan_sim_table(const ScanSimResult& result) {
    std::ostringstream out;
    char buf[64];
    out << "            ";
    for (double a : result.alphas) {
        std::snprintf(buf, sizeof buf, "  alpha=%-6g", a);
        out << buf;
    }
    out << '\n';
    for (Index k = 0; k < result.fraction.rows(); ++k) {
        std::snprintf(buf, sizeof buf, "Mode %-7lld", static_cast<long long>(k + 1));
        out << buf;
        for (Index a = 0; a < result.fraction.cols(); ++a) {
            std::snprintf(buf, sizeof buf, "  %-12.3f", result.fraction(k, a));
            out << buf;
        }
        out << '\n';
    }
    return out.str();
}

std::string render_capm_report(const CapmResult& result) {
    std::ostringstream out;
    out << "n_components=" << result.beta_hat.size() << '\n';
    out << "mean_market=" << format_g6(result.mean_market) << '\n';
    for (Index i = 0; i < result.beta_hat.size(); ++i)
        out << "beta_" << i + 1 << '=' << format_g6(result.beta_hat[i]) << '\n';
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot rename " + tmp + " to " + path + ": " +
                                 ec.message());
    }
}

namespace {

std::vector<int> parse_int_list(const std::string& value) {
    std::vector<int> out;
    for (const std::string& tok : split_tokens(value))
        out.push_back(std::stoi(tok));
    return out;
}

std::vector<double> parse_double_list(const std::string& value) {
    std::vector<double> out;
    for (const std::string& tok : split_tokens(value)) out.push_back(std::stod(tok));
    return out;
}

}  // namespace

SimulateJob parse_simulate_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);

    SimulateJob job;
    DgpConfig& cfg = job.config;
    double zeta_scalar = -1.0;
    std::vector<std::pair<int, std::vector<double>>> zeta_modes;

    std::string line;
    Index line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        size_t eq = line.find('=');
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (eq == std::string::npos)
            throw parse_error(path, line_no, "expected key=value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t'))
            key.pop_back();
        while (!value.empty() && (value.front() == ' ' || value.front() == '\t'))
            value.erase(value.begin());
        while (!value.empty() &&
               (value.back() == ' ' || value.back() == '\t' || value.back() == '\r'))
            value.pop_back();

        try {
            if (key == "dims") {
                cfg.dims.clear();
                for (int d : parse_int_list(value)) cfg.dims.push_back(d);
            } else if (key == "t_len") {
                cfg.t_len = std::stol(value);
            } else if (key == "ranks") {
                cfg.ranks = parse_int_list(value);
            } else if (key == "mode_set") {
                cfg.mode_set.clear();
                for (int m : parse_int_list(value)) cfg.mode_set.push_back(m - 1);
            } else if (key == "hypothesis") {
                if (value == "H0")
                    cfg.hypothesis = Hypothesis::H0;
                else if (value == "H1")
                    cfg.hypothesis = Hypothesis::H1;
                else
                    throw std::runtime_error("hypothesis must be H0 or H1");
            } else if (key == "innovation") {
                if (value == "normal")
                    cfg.innovation = Innovation::Gaussian;
                else if (value == "t3")
                    cfg.innovation = Innovation::StudentT3;
                else
                    throw std::runtime_error("innovation must be normal or t3");
            } else if (key == "zeta") {
                zeta_scalar = std::stod(value);
            } else if (key.rfind("zeta_", 0) == 0 && key != "zeta_v") {
                zeta_modes.emplace_back(std::stoi(key.substr(5)) - 1,
                                        parse_double_list(value));
            } else if (key == "zeta_v") {
                cfg.zeta_merged = parse_double_list(value);
            } else if (key == "noise_ranks") {
                cfg.noise_ranks = parse_int_list(value);
            } else if (key == "sparsity") {
                cfg.sparsity = std::stod(value);
            } else if (key == "noise_scale") {
                cfg.noise_scale = std::stod(value);
            } else if (key == "seed") {
                cfg.seed = std::stoull(value);
            } else if (key == "r_v_override") {
                cfg.r_v_override = std::stoi(value);
            } else if (key == "misspecify_r_v") {
                cfg.misspecify_r_v = std::stoi(value) != 0;
            } else if (key == "reps") {
                job.reps = std::stoi(value);
            } else if (key == "alphas") {
                job.alphas = parse_double_list(value);
            } else if (key == "threads") {
                job.threads = std::stoi(value);
            } else if (key == "procedure") {
                if (value == "test")
                    job.scan = false;
                else if (value == "scan")
                    job.scan = true;
                else
                    throw std::runtime_error("procedure must be test or scan");
            } else if (key == "r_vec") {
                job.r_vec = std::stoi(value);
            } else {
                throw std::runtime_error("unknown key '" + key + "'");
            }
        } catch (const std::runtime_error&) {
            throw;
        } catch (const std::exception&) {
            throw parse_error(path, line_no, "bad value for '" + key + "'");
        }
    }

    if (cfg.dims.empty())
        throw std::runtime_error(path + ": missing required key 'dims'");
    if (cfg.t_len == 0)
        throw std::runtime_error(path + ": missing required key 't_len'");
    if (cfg.ranks.empty())
        cfg.ranks.assign(cfg.dims.size(), 2);
    if (cfg.mode_set.empty() && !job.scan)
        throw std::runtime_error(path + ": missing required key 'mode_set'");
    if (cfg.mode_set.empty())
        for (size_t k = 0; k < cfg.dims.size(); ++k)
            cfg.mode_set.push_back(static_cast<int>(k));

    if (zeta_scalar >= 0.0 || !zeta_modes.empty()) {
        cfg.zeta.assign(cfg.dims.size(), {});
        for (size_t k = 0; k < cfg.dims.size(); ++k)
            cfg.zeta[k].assign(static_cast<size_t>(cfg.ranks[k]),
                               zeta_scalar >= 0.0 ? zeta_scalar : 0.0);
        for (const auto& [mode, values] : zeta_modes) {
            if (mode < 0 || mode >= static_cast<int>(cfg.dims.size()))
                throw std::runtime_error(path + ": zeta mode out of range");
            cfg.zeta[static_cast<size_t>(mode)] = values;
        }
    }
    return job;
}

}  // namespace kronfm
