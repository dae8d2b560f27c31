#include "bmfg/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace bmfg {

void SimConfig::validate() const
{
    if (agents < 1)
        throw std::invalid_argument("agents must be >= 1");
    if (burn_in < 0 || horizon <= burn_in)
        throw std::invalid_argument("need T > burn_in >= 0");
    if (histogram_bins < 1)
        throw std::invalid_argument("histogram_bins must be >= 1");
    if (threads < 1)
        throw std::invalid_argument("threads must be >= 1");
    if (initial_law == InitialLaw::custom && !custom_law)
        throw std::invalid_argument("custom initial law requires a distribution");
}

namespace {

// Calls fn(block, begin, end) for fixed-size blocks of [0, count). Workers
// pull blocks from a shared counter; callers reduce per-block results in
// block order so the outcome does not depend on the thread count.
template <class Fn>
void for_blocks(long count, long block, int threads, Fn&& fn)
{
    const long nblocks = (count + block - 1) / block;
    std::atomic<long> next{0};
    auto work = [&] {
        for (long b = next++; b < nblocks; b = next++)
            fn(b, b * block, std::min(count, (b + 1) * block));
    };
    const int nt = static_cast<int>(std::min<long>(threads, std::max<long>(nblocks, 1)));
    std::vector<std::thread> pool;
    for (int i = 1; i < nt; ++i)
        pool.emplace_back(work);
    work();
    for (auto& t : pool)
        t.join();
}

// Inverse CDF of an atom-plus-density law.
class Quantile {
public:
    explicit Quantile(const StationaryDistribution& d) : atom0_(d.atom0), atom1_(d.atom_at_one)
    {
        const auto pl = d.density_knots();
        x_.assign(pl.x().begin(), pl.x().end());
        y_.assign(pl.y().begin(), pl.y().end());
        cum_.assign(x_.size(), 0.0);
        for (std::size_t k = 1; k < x_.size(); ++k)
            cum_[k] = cum_[k - 1] + 0.5 * (y_[k - 1] + y_[k]) * (x_[k] - x_[k - 1]);
    }

    double operator()(double u) const
    {
        if (u < atom0_)
            return 0.0;
        double t = u - atom0_;
        if (atom1_ || cum_.back() <= 0.0)
            return t >= cum_.back() ? 1.0 : invert(t);
        return invert(std::min(t, cum_.back()));
    }

private:
    double invert(double t) const
    {
        auto it = std::upper_bound(cum_.begin(), cum_.end(), t);
        if (it == cum_.end())
            return x_.back();
        std::size_t k = static_cast<std::size_t>(it - cum_.begin());
        k = std::max<std::size_t>(k, 1) - 1;
        while (k + 1 < x_.size() && x_[k + 1] <= x_[k])
            ++k;
        if (k + 1 >= x_.size())
            return x_.back();
        const double w = x_[k + 1] - x_[k];
        const double r = t - cum_[k];
        const double y0 = y_[k];
        const double s = (y_[k + 1] - y_[k]) / w;
        double d;
        if (std::abs(s) * w < 1e-12 * std::max(y0, 1e-300))
            d = y0 > 0.0 ? r / y0 : 0.0;
        else
            d = (-y0 + std::sqrt(std::max(0.0, y0 * y0 + 2.0 * s * r))) / s;
        return x_[k] + std::clamp(d, 0.0, w);
    }

    double atom0_;
    bool atom1_;
    std::vector<double> x_, y_, cum_;
};

struct CycleSums {
    long count = 0;
    double tau = 0, tau2 = 0, s = 0, s2 = 0, l2 = 0, sl = 0;

    void add(double t, double sum)
    {
        const double l = 1.0 + t;
        ++count;
        tau += t;
        tau2 += t * t;
        s += sum;
        s2 += sum * sum;
        l2 += l * l;
        sl += sum * l;
    }
    void merge(const CycleSums& o)
    {
        count += o.count;
        tau += o.tau;
        tau2 += o.tau2;
        s += o.s;
        s2 += o.s2;
        l2 += o.l2;
        sl += o.sl;
    }
    CycleStats finish() const
    {
        CycleStats c;
        c.count = count;
        if (count == 0)
            return c;
        const double n = static_cast<double>(count);
        c.mean_tau = tau / n;
        c.mean_length = 1.0 + c.mean_tau;
        c.mean_cycle_sum = s / n;
        c.ratio = c.mean_cycle_sum / c.mean_length;
        if (count >= 2) {
            const double var_tau = std::max(0.0, (tau2 - n * c.mean_tau * c.mean_tau) / (n - 1));
            const double var_s = std::max(0.0, (s2 - n * c.mean_cycle_sum * c.mean_cycle_sum) / (n - 1));
            const double r = c.ratio;
            // residuals S - r L have mean zero by construction of r
            const double var_res = std::max(0.0, (s2 - 2.0 * r * sl + r * r * l2) / (n - 1));
            c.tau_std_error = std::sqrt(var_tau / n);
            c.cycle_sum_std_error = std::sqrt(var_s / n);
            c.std_error = std::sqrt(var_res / n) / c.mean_length;
        }
        return c;
    }
};

Estimate mean_and_error(const std::vector<double>& v)
{
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v)
        mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v)
        ss += (x - mean) * (x - mean);
    return {mean, v.size() > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0};
}

constexpr long kBlock = 256;

} // namespace

SimStats simulate_population(const GameModel& model, const SimConfig& cfg)
{
    cfg.validate();
    const TransitionKernel& kernel = model.kernel();
    const int T = cfg.horizon;
    const int bins = cfg.histogram_bins;
    const Threshold policy = cfg.policy;
    std::optional<Quantile> custom;
    if (cfg.initial_law == InitialLaw::custom)
        custom.emplace(*cfg.custom_law);

    struct Block {
        std::vector<double> traj;
        std::vector<long> hist;
        long zeros = 0;
        CycleSums cycles;
    };
    const long N = cfg.agents;
    std::vector<Block> blocks((N + kBlock - 1) / kBlock);
    std::vector<double> averages(N), terminal(N);

    for_blocks(N, kBlock, cfg.threads, [&](long b, long begin, long end) {
        Block& blk = blocks[b];
        blk.traj.assign(T, 0.0);
        blk.hist.assign(bins, 0);
        for (long i = begin; i < end; ++i) {
            Rng rng = make_stream(cfg.seed, static_cast<std::uint64_t>(i));
            double x = 0.0;
            if (cfg.initial_law == InitialLaw::uniform)
                x = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            else if (custom)
                x = (*custom)(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
            double acc = 0.0, cycle_sum = 0.0;
            long tau = 0;
            bool in_cycle = false;
            for (int t = 0; t < T; ++t) {
                blk.traj[t] += x;
                const bool act = policy.acts_at(x);
                if (t >= cfg.burn_in) {
                    acc += x;
                    if (x == 0.0)
                        ++blk.zeros;
                    else
                        ++blk.hist[std::min(bins - 1, static_cast<int>(x * bins))];
                    if (policy.is_interior()) {
                        if (x == 0.0 && !in_cycle) {
                            in_cycle = true;
                            cycle_sum = 0.0;
                            tau = 0;
                        }
                        if (in_cycle) {
                            cycle_sum += x;
                            if (act) {
                                blk.cycles.add(static_cast<double>(tau), cycle_sum);
                                in_cycle = false;
                            } else {
                                ++tau;
                            }
                        }
                    }
                }
                if (t + 1 < T)
                    x = act ? 0.0 : kernel.sample(x, rng);
            }
            averages[i] = acc / (T - cfg.burn_in);
            terminal[i] = x;
        }
    });

    SimStats st;
    st.trajectory.assign(T, 0.0);
    std::vector<long> hist(bins, 0);
    long zeros = 0;
    CycleSums cycles;
    for (const Block& blk : blocks) {
        for (int t = 0; t < T; ++t)
            st.trajectory[t] += blk.traj[t];
        for (int k = 0; k < bins; ++k)
            hist[k] += blk.hist[k];
        zeros += blk.zeros;
        cycles.merge(blk.cycles);
    }
    for (double& v : st.trajectory)
        v /= static_cast<double>(N);

    const double total = static_cast<double>(N) * (T - cfg.burn_in);
    st.histogram.atom0 = zeros / total;
    st.histogram.edges.resize(bins + 1);
    st.histogram.mass.resize(bins);
    for (int k = 0; k <= bins; ++k)
        st.histogram.edges[k] = k == bins ? 1.0 : static_cast<double>(k) / bins;
    for (int k = 0; k < bins; ++k)
        st.histogram.mass[k] = hist[k] / total;

    st.pooled_time_average = mean_and_error(averages);
    st.agent_time_average = std::move(averages);
    std::sort(terminal.begin(), terminal.end());
    st.terminal_states = std::move(terminal);
    if (policy.is_interior())
        st.cycles = cycles.finish();
    return st;
}

CycleStats cycle_statistics(const TransitionKernel& kernel, double theta, long replications, std::uint64_t seed,
                            int threads)
{
    if (!(theta > 0.0 && theta < 1.0))
        throw std::invalid_argument("cycle statistics need theta in (0,1)");
    if (replications < 100)
        throw std::invalid_argument("cycle statistics need at least 100 replications");
    std::vector<CycleSums> parts((replications + kBlock - 1) / kBlock);
    for_blocks(replications, kBlock, std::max(threads, 1), [&](long b, long begin, long end) {
        for (long r = begin; r < end; ++r) {
            Rng rng = make_stream(seed, static_cast<std::uint64_t>(r));
            double y = 0.0, sum = 0.0;
            long tau = 0;
            for (;;) {
                sum += y;
                if (y >= theta)
                    break;
                y = kernel.sample(y, rng);
                ++tau;
            }
            parts[b].add(static_cast<double>(tau), sum);
        }
    });
    CycleSums all;
    for (const auto& p : parts)
        all.merge(p);
    return all.finish();
}

Distances empirical_vs_stationary(const SimStats& stats, const StationaryDistribution& dist)
{
    const auto& edges = stats.histogram.edges;
    const Grid& grid = dist.density.grid();
    const int bins = static_cast<int>(stats.histogram.mass.size());
    if (bins < 1 || static_cast<int>(edges.size()) != bins + 1 || grid.n() % bins != 0)
        throw std::invalid_argument("bin mismatch: histogram bins must be aligned with the grid");
    const int stride = grid.n() / bins;
    for (int k = 0; k <= bins; ++k)
        if (std::abs(edges[k] - grid.node(k * stride)) > 1e-12)
            throw std::invalid_argument("bin mismatch: histogram bins must be aligned with the grid");

    const auto pl = dist.density_knots();
    double tv = std::abs(stats.histogram.atom0 - dist.atom0);
    for (int k = 0; k < bins; ++k) {
        double p = pl.integrate(edges[k], edges[k + 1]);
        if (k == bins - 1 && dist.atom_at_one)
            p += 1.0;
        tv += std::abs(stats.histogram.mass[k] - p);
    }

    double w1 = 0.0;
    const auto& xs = stats.terminal_states;
    if (!xs.empty()) {
        const Quantile q(dist);
        const double n = static_cast<double>(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i)
            w1 += std::abs(xs[i] - q((static_cast<double>(i) + 0.5) / n));
        w1 /= n;
    }
    return {0.5 * tv, w1};
}

int required_horizon(const GameModel& model, double z)
{
    const CostModel& c = model.cost();
    double max_cost = 0.0;
    for (double x : model.grid().nodes())
        max_cost = std::max(max_cost, c.cost(x, z) + c.gamma);
    const double bound = 1e-4 * (1.0 - c.beta) / std::max(max_cost, 1e-300);
    if (bound >= 1.0)
        return 1;
    // beta^H < bound
    return static_cast<int>(std::floor(std::log(bound) / std::log(c.beta))) + 1;
}

Estimate evaluate_policy_cost(const GameModel& model, double z, const Threshold& theta, double x0, long replications,
                              int horizon, std::uint64_t seed, int threads)
{
    if (replications < 2)
        throw std::invalid_argument("need at least two replications");
    if (!(x0 >= 0.0 && x0 <= 1.0))
        throw std::invalid_argument("x0 must lie in [0,1]");
    if (horizon < required_horizon(model, z))
        throw std::invalid_argument("insufficient horizon: need at least " +
                                    std::to_string(required_horizon(model, z)) + " steps");
    const CostModel& c = model.cost();
    const TransitionKernel& kernel = model.kernel();
    std::vector<double> costs(replications);
    for_blocks(replications, kBlock, std::max(threads, 1), [&](long, long begin, long end) {
        for (long r = begin; r < end; ++r) {
            Rng rng = make_stream(seed, static_cast<std::uint64_t>(r));
            double x = x0, disc = 1.0, total = 0.0;
            for (int t = 0; t < horizon; ++t) {
                const bool act = theta.acts_at(x);
                total += disc * (c.cost(x, z) + (act ? c.gamma : 0.0));
                x = act ? 0.0 : kernel.sample(x, rng);
                disc *= c.beta;
            }
            costs[r] = total;
        }
    });
    return mean_and_error(costs);
}

} // namespace bmfg
