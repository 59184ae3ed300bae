// SPDX-License-Identifier: MIT
#include "kronfm/dgp.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace kronfm {

namespace {

constexpr std::uint64_t kMisspecSalt = 0x5bd1e995u;

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
    if (threads <= 0) {
        unsigned hw = std::thread::hardware_concurrency();
        threads = hw == 0 ? 1 : static_cast<int>(hw);
    }
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

double draw_innovation(Innovation innovation, std::mt19937_64& rng) {
    if (innovation == Innovation::Gaussian) {
        std::normal_distribution<double> normal(0.0, 1.0);
        return normal(rng);
    }
    std::student_t_distribution<double> t3(3.0);
    return t3(rng) / std::sqrt(3.0);  // unit variance
}

/// Elementwise AR(2) series for a block of `count` elements; row e of
/// the result is the path of element e.
MatrixXd ar2_block(Index count, Index t_len, const ArCoeffs& c,
                   Innovation innovation, std::mt19937_64& rng) {
    MatrixXd out(count, t_len);
    for (Index e = 0; e < count; ++e) {
        std::vector<double> path = simulate_ar2(t_len, c, innovation, rng);
        for (Index t = 0; t < t_len; ++t)
            out(e, t) = path[static_cast<size_t>(t)];
    }
    return out;
}

std::vector<double> zeta_for_mode(const DgpConfig& cfg, int mode) {
    if (cfg.zeta.empty()) return {};
    return cfg.zeta[static_cast<size_t>(mode)];
}

int noise_rank(const DgpConfig& cfg, int mode) {
    if (cfg.noise_ranks.empty()) return 2;
    return cfg.noise_ranks[static_cast<size_t>(mode)];
}

}  // namespace

int DgpConfig::merged_rank_true() const {
    int r = 1;
    for (int m : mode_set) r *= ranks[static_cast<size_t>(m)];
    return r;
}

ModeSet DgpConfig::merge_set() const { return ModeSet(mode_set, order()); }

void DgpConfig::validate() const {
    if (dims.empty()) throw std::invalid_argument("dgp: dims must be nonempty");
    if (t_len < 2) throw std::invalid_argument("dgp: series length must be >= 2");
    if (ranks.size() != dims.size())
        throw std::invalid_argument("dgp: one rank per mode required");
    for (size_t k = 0; k < dims.size(); ++k)
        if (ranks[k] < 1 || ranks[k] > dims[k])
            throw std::invalid_argument("dgp: rank exceeds mode extent");
    merge_set();  // validates the mode set
    if (!zeta.empty()) {
        if (zeta.size() != dims.size())
            throw std::invalid_argument("dgp: zeta needs one entry per mode");
        for (size_t k = 0; k < zeta.size(); ++k) {
            if (static_cast<int>(zeta[k].size()) != ranks[k])
                throw std::invalid_argument("dgp: zeta entry per factor required");
            for (double z : zeta[k])
                if (z < 0.0 || z > 0.5)
                    throw std::invalid_argument("dgp: zeta must lie in [0, 0.5]");
        }
    }
    if (!noise_ranks.empty() && noise_ranks.size() != dims.size())
        throw std::invalid_argument("dgp: noise rank per mode required");
    if (sparsity < 0.0 || sparsity > 1.0)
        throw std::invalid_argument("dgp: sparsity must lie in [0, 1]");
    if (noise_scale < 0.0)
        throw std::invalid_argument("dgp: noise scale must be >= 0");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t s = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    s = (s ^ (s >> 30)) * 0xBF58476D1CE4E5B9ULL;
    s = (s ^ (s >> 27)) * 0x94D049BB133111EBULL;
    return s ^ (s >> 31);
}

double ar2_stationary_variance(const ArCoeffs& c) {
    double denom = (1.0 + c.phi2) *
                   ((1.0 - c.phi2) * (1.0 - c.phi2) - c.phi1 * c.phi1);
    return (1.0 - c.phi2) / denom;
}

std::vector<double> simulate_ar2(Index t_len, const ArCoeffs& c,
                                 Innovation innovation, std::mt19937_64& rng,
                                 int burn_in) {
    if (!(c.phi2 > -1.0 && c.phi2 < 1.0 - std::abs(c.phi1)))
        throw std::invalid_argument("simulate_ar2: non-stationary coefficients");
    const double sd = std::sqrt(ar2_stationary_variance(c));
    std::vector<double> out(static_cast<size_t>(t_len));
    double prev1 = 0.0, prev2 = 0.0;
    for (Index t = -static_cast<Index>(burn_in); t < t_len; ++t) {
        double x = c.phi1 * prev1 + c.phi2 * prev2 +
                   draw_innovation(innovation, rng);
        prev2 = prev1;
        prev1 = x;
        if (t >= 0) out[static_cast<size_t>(t)] = x / sd;
    }
    return out;
}

MatrixXd random_loading(Index d, int r, const std::vector<double>& zeta,
                        std::mt19937_64& rng) {
    if (!zeta.empty() && static_cast<int>(zeta.size()) != r)
        throw std::invalid_argument("random_loading: one exponent per factor");
    std::normal_distribution<double> normal(0.0, 1.0);
    MatrixXd a(d, r);
    for (int h = 0; h < r; ++h) {
        double scale =
            zeta.empty() ? 1.0
                         : std::pow(static_cast<double>(d),
                                    -zeta[static_cast<size_t>(h)]);
        for (Index i = 0; i < d; ++i) a(i, h) = normal(rng) * scale;
    }
    return a;
}

MatrixXd random_sparse_loading(Index d, int r, double zero_prob,
                               std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    MatrixXd a(d, r);
    for (int h = 0; h < r; ++h)
        for (Index i = 0; i < d; ++i) {
            double value = normal(rng);
            a(i, h) = uniform(rng) < zero_prob ? 0.0 : value;
        }
    return a;
}

SimulationDraw simulate_draw(const DgpConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const int order = config.order();
    const ModeSet merge = config.merge_set();
    const int split = merge.order() - merge.count();
    const Index t_len = config.t_len;

    SimulationDraw draw;

    // 1. Factor loadings.
    if (config.hypothesis == Hypothesis::H0) {
        for (int k = 0; k < order; ++k)
            draw.loadings.push_back(
                random_loading(config.dims[static_cast<size_t>(k)],
                               config.ranks[static_cast<size_t>(k)],
                               zeta_for_mode(config, k), rng));
    } else {
        for (int j = 0; j < split; ++j)
            draw.loadings.push_back(
                random_loading(config.dims[static_cast<size_t>(j)],
                               config.ranks[static_cast<size_t>(j)],
                               zeta_for_mode(config, j), rng));
        Index d_merged = 1;
        for (int m : config.mode_set) d_merged *= config.dims[static_cast<size_t>(m)];
        draw.loadings.push_back(random_loading(
            d_merged, config.merged_rank_true(), config.zeta_merged, rng));
    }

    // 2. Sparse noise loadings, 3. standard-deviation field.
    std::vector<MatrixXd> noise_loadings;
    for (int k = 0; k < order; ++k)
        noise_loadings.push_back(
            random_sparse_loading(config.dims[static_cast<size_t>(k)],
                                  noise_rank(config, k), config.sparsity, rng));
    Index d_total = 1;
    for (Index d : config.dims) d_total *= d;
    VectorXd sigma(d_total);
    for (Index i = 0; i < d_total; ++i) sigma[i] = std::abs(normal(rng));

    // 4. Factor core series.
    std::vector<Index> core_dims;
    if (config.hypothesis == Hypothesis::H0) {
        for (int r : config.ranks) core_dims.push_back(r);
    } else {
        for (int j = 0; j < split; ++j)
            core_dims.push_back(config.ranks[static_cast<size_t>(j)]);
        core_dims.push_back(config.merged_rank_true());
    }
    Index core_size = 1;
    for (Index r : core_dims) core_size *= r;
    draw.factors.dims = core_dims;
    draw.factors.data = ar2_block(core_size, t_len, config.ar_factor,
                                  config.innovation, rng);

    // 5. Noise factor core, 6. idiosyncratic field.
    std::vector<Index> noise_core_dims;
    Index noise_core_size = 1;
    for (int k = 0; k < order; ++k) {
        noise_core_dims.push_back(noise_rank(config, k));
        noise_core_size *= noise_rank(config, k);
    }
    MatrixXd noise_core = ar2_block(noise_core_size, t_len,
                                    config.ar_noise_factor, config.innovation,
                                    rng);
    MatrixXd idio = ar2_block(d_total, t_len, config.ar_idio,
                              config.innovation, rng);

    // Assemble the noise series in original shape.
    TensorSeries noise = TensorSeries::zeros(config.dims, t_len);
    for (Index t = 0; t < t_len; ++t) {
        Tensor fe(noise_core_dims, noise_core.col(t));
        for (int k = 0; k < order; ++k)
            fe = mode_product(fe, noise_loadings[static_cast<size_t>(k)], k);
        noise.data.col(t) =
            (fe.data() + sigma.cwiseProduct(idio.col(t))) * config.noise_scale;
    }

    // Assemble the common component and the observed series.
    if (config.hypothesis == Hypothesis::H0) {
        draw.common = TensorSeries::zeros(config.dims, t_len);
        for (Index t = 0; t < t_len; ++t) {
            Tensor c(core_dims, draw.factors.data.col(t));
            for (int k = 0; k < order; ++k)
                c = mode_product(c, draw.loadings[static_cast<size_t>(k)], k);
            draw.common.data.col(t) = c.data();
        }
    } else {
        TensorSeries common_reshaped;
        for (Index t = 0; t < t_len; ++t) {
            Tensor c(core_dims, draw.factors.data.col(t));
            for (size_t m = 0; m < draw.loadings.size(); ++m)
                c = mode_product(c, draw.loadings[m], static_cast<int>(m));
            if (t == 0) {
                common_reshaped.dims = c.dims();
                common_reshaped.data.resize(c.size(), t_len);
            }
            common_reshaped.data.col(t) = c.data();
        }
        draw.common = unreshape(common_reshaped, config.dims, merge);
    }

    draw.series = draw.common;
    draw.series.data += noise.data;
    return draw;
}

TensorSeries simulate(const DgpConfig& config) {
    return std::move(simulate_draw(config).series);
}

namespace {

RankSpec spec_for(const DgpConfig& config, int r_v_test) {
    std::vector<int> pre_ranks;
    const ModeSet merge = config.merge_set();
    for (int k = 0; k < config.order(); ++k)
        if (!merge.contains(k))
            pre_ranks.push_back(config.ranks[static_cast<size_t>(k)]);
    return RankSpec{merge, std::move(pre_ranks), r_v_test};
}

int test_rank_for_rep(const DgpConfig& config, int rep) {
    if (config.misspecify_r_v) {
        std::mt19937_64 rng(derive_seed(config.seed ^ kMisspecSalt,
                                        static_cast<std::uint64_t>(rep)));
        std::uniform_int_distribution<int> pick(2, 6);
        return pick(rng);
    }
    if (config.r_v_override > 0) return config.r_v_override;
    return config.merged_rank_true();
}

}  // namespace

SimResult monte_carlo(const DgpConfig& config, int reps,
                      const std::vector<double>& alphas, int threads) {
    if (reps < 1) throw std::invalid_argument("monte_carlo: reps must be >= 1");
    if (alphas.empty())
        throw std::invalid_argument("monte_carlo: need at least one level");
    config.validate();

    SimResult result;
    result.alphas = alphas;
    result.reports.resize(static_cast<size_t>(reps));

    parallel_for(reps, threads, [&](int rep) {
        DgpConfig cfg = config;
        cfg.seed = derive_seed(config.seed, static_cast<std::uint64_t>(rep));
        TensorSeries y = simulate(cfg);
        RankSpec spec = spec_for(config, test_rank_for_rep(config, rep));
        AggStats stats = compute_agg_stats(y, spec);
        std::vector<TestReport>& out = result.reports[static_cast<size_t>(rep)];
        out.reserve(alphas.size());
        for (double alpha : alphas) out.push_back(decide(stats, alpha));
    });

    result.mean_alpha_hat.assign(alphas.size(), 0.0);
    result.mean_p_hat.assign(alphas.size(), 0.0);
    for (int rep = 0; rep < reps; ++rep)
        for (size_t a = 0; a < alphas.size(); ++a) {
            result.mean_alpha_hat[a] +=
                result.reports[static_cast<size_t>(rep)][a].alpha_hat;
            result.mean_p_hat[a] +=
                result.reports[static_cast<size_t>(rep)][a].p_hat;
        }
    for (size_t a = 0; a < alphas.size(); ++a) {
        result.mean_alpha_hat[a] /= reps;
        result.mean_p_hat[a] /= reps;
    }
    return result;
}

ScanSimResult scan_monte_carlo(const DgpConfig& config, int reps,
                               const std::vector<double>& alphas, int r_vec,
                               int threads) {
    if (reps < 1)
        throw std::invalid_argument("scan_monte_carlo: reps must be >= 1");
    if (alphas.empty())
        throw std::invalid_argument("scan_monte_carlo: need at least one level");
    config.validate();

    const int order = config.order();
    ScanSimResult result;
    result.alphas = alphas;
    result.reports.resize(static_cast<size_t>(reps));

    parallel_for(reps, threads, [&](int rep) {
        DgpConfig cfg = config;
        cfg.seed = derive_seed(config.seed, static_cast<std::uint64_t>(rep));
        TensorSeries y = simulate(cfg);

        // One aggregation per mode, decided at every level.
        std::vector<ScanReport> by_alpha(alphas.size());
        for (int k = 0; k < order; ++k) {
            std::vector<int> rest;
            for (int m = 0; m < order; ++m)
                if (m != k) rest.push_back(m);
            TensorSeries w = reshape(y, ModeSet(rest, order));
            RankSpec spec{ModeSet::suffix(0, 2), {}, r_vec};
            AggStats stats = compute_agg_stats(w, spec);
            for (size_t a = 0; a < alphas.size(); ++a) {
                TestReport rep_k = decide(stats, alphas[a]);
                if (rep_k.reject) by_alpha[a].a_star.push_back(k);
                by_alpha[a].per_mode.push_back(std::move(rep_k));
            }
        }
        result.reports[static_cast<size_t>(rep)] = std::move(by_alpha);
    });

    result.fraction = MatrixXd::Zero(order, static_cast<Index>(alphas.size()));
    for (int rep = 0; rep < reps; ++rep)
        for (size_t a = 0; a < alphas.size(); ++a)
            for (int k :
                 result.reports[static_cast<size_t>(rep)][a].a_star)
                result.fraction(k, static_cast<Index>(a)) += 1.0;
    result.fraction /= static_cast<double>(reps);
    return result;
}

}  // namespace kronfm
