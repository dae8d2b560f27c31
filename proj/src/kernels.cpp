#include "bmfg/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bmfg {

Rng make_stream(std::uint64_t seed, std::uint64_t index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x9e3779b9u};
    return Rng(seq);
}

namespace {

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

void require_interior(double x)
{
    if (!(x >= 0.0 && x < 1.0))
        throw std::invalid_argument("kernel density requires 0 <= x < 1, got x=" + std::to_string(x));
}

double table_lookup(const std::vector<double>& t, int m, double y, double x)
{
    const double fx = std::clamp(x, 0.0, 1.0) * m, fy = std::clamp(y, 0.0, 1.0) * m;
    const int i = std::min(static_cast<int>(fx), m - 1), k = std::min(static_cast<int>(fy), m - 1);
    const double a = fx - i, b = fy - k;
    auto at = [&](int r, int c) { return t[static_cast<std::size_t>(r) * (m + 1) + c]; };
    return (1 - a) * ((1 - b) * at(i, k) + b * at(i, k + 1)) + a * ((1 - b) * at(i + 1, k) + b * at(i + 1, k + 1));
}

std::vector<std::vector<double>> read_matrix(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
            continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                         ": not a number: '" + cell + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<double> flatten_square(const std::vector<std::vector<double>>& rows, const std::string& what, int& m)
{
    const std::size_t s = rows.size();
    if (s < 3)
        throw std::runtime_error(what + ": need at least a 3x3 table");
    std::vector<double> out;
    out.reserve(s * s);
    for (const auto& r : rows) {
        if (r.size() != s)
            throw std::runtime_error(what + ": table must be square");
        out.insert(out.end(), r.begin(), r.end());
    }
    m = static_cast<int>(s) - 1;
    return out;
}

} // namespace

GapDensity GapDensity::uniform() { return power(1.0); }

GapDensity GapDensity::power(double a)
{
    if (!(a >= 1.0))
        throw std::invalid_argument("gap density exponent must be >= 1");
    GapDensity d;
    d.label = a == 1.0 ? "uniform" : "power(" + std::to_string(a) + ")";
    d.pdf = [a](double xi) { return a == 1.0 ? 1.0 : a * std::pow(xi, a - 1.0); };
    d.pdf_derivative = [a](double xi) {
        if (a == 1.0)
            return 0.0;
        return a * (a - 1.0) * std::pow(xi, a - 2.0);
    };
    d.cdf = [a](double xi) { return std::pow(std::clamp(xi, 0.0, 1.0), a); };
    d.inverse_cdf = [a](double u) { return std::pow(u, 1.0 / a); };
    return d;
}

DensityTable DensityTable::load_csv(const std::filesystem::path& density_csv,
                                    const std::optional<std::filesystem::path>& derivative_csv)
{
    DensityTable t;
    t.density = flatten_square(read_matrix(density_csv), density_csv.string(), t.m);
    if (derivative_csv) {
        int m2 = 0;
        t.derivative = flatten_square(read_matrix(*derivative_csv), derivative_csv->string(), m2);
        if (m2 != t.m)
            throw std::runtime_error("derivative table size differs from density table");
    }
    return t;
}

TransitionKernel TransitionKernel::uniform() { return TransitionKernel(Uniform{}); }

TransitionKernel TransitionKernel::multiplicative_gap(GapDensity xi)
{
    return TransitionKernel(MultiplicativeGap{std::move(xi)});
}

TransitionKernel TransitionKernel::tabulated(DensityTable table)
{
    if (table.m < 2)
        throw std::invalid_argument("density table too small");
    return TransitionKernel(Tabulated{std::make_shared<const DensityTable>(std::move(table))});
}

double TransitionKernel::density(double y, double x) const
{
    require_interior(x);
    if (y < x || y > 1.0)
        return 0.0;
    return std::visit(
        [&](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Uniform>) {
                return 1.0 / (1.0 - x);
            } else if constexpr (std::is_same_v<K, MultiplicativeGap>) {
                return k.xi.pdf((1.0 - y) / (1.0 - x)) / (1.0 - x);
            } else {
                return table_lookup(k.table->density, k.table->m, y, x);
            }
        },
        impl_);
}

double TransitionKernel::density_dx(double y, double x) const
{
    require_interior(x);
    if (y < x || y > 1.0)
        return 0.0;
    return std::visit(
        [&](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Uniform>) {
                return 1.0 / ((1.0 - x) * (1.0 - x));
            } else if constexpr (std::is_same_v<K, MultiplicativeGap>) {
                const double xi = (1.0 - y) / (1.0 - x);
                return (k.xi.pdf_derivative(xi) * xi + k.xi.pdf(xi)) / ((1.0 - x) * (1.0 - x));
            } else {
                if (!k.table->derivative)
                    throw SolverError("derivative unavailable for tabulated kernel");
                return table_lookup(*k.table->derivative, k.table->m, y, x);
            }
        },
        impl_);
}

double TransitionKernel::cdf(double y, double x) const
{
    if (x >= 1.0)
        return y >= 1.0 ? 1.0 : 0.0;
    if (y < x)
        return 0.0;
    if (y >= 1.0)
        return 1.0;
    return std::visit(
        [&](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Uniform>) {
                return (y - x) / (1.0 - x);
            } else if constexpr (std::is_same_v<K, MultiplicativeGap>) {
                return 1.0 - k.xi.cdf((1.0 - y) / (1.0 - x));
            } else {
                const int m = k.table->m;
                std::vector<double> pts{x};
                for (int c = 1; c < m; ++c) {
                    const double yc = static_cast<double>(c) / m;
                    if (yc > x && yc < 1.0)
                        pts.push_back(yc);
                }
                pts.push_back(1.0);
                const auto w = trapezoid_weights(pts);
                double total = 0.0, part = 0.0;
                for (std::size_t i = 0; i < pts.size(); ++i)
                    total += w[i] * density(pts[i], x);
                // partial mass up to y on the same knots plus y itself
                std::vector<double> sub;
                for (double p : pts)
                    if (p < y)
                        sub.push_back(p);
                sub.push_back(y);
                const auto ws = trapezoid_weights(sub);
                for (std::size_t i = 0; i < sub.size(); ++i)
                    part += ws[i] * density(sub[i], x);
                return total > 0.0 ? std::clamp(part / total, 0.0, 1.0) : 0.0;
            }
        },
        impl_);
}

double TransitionKernel::sample(double x, Rng& rng) const
{
    if (x >= 1.0)
        return 1.0;
    return std::visit(
        [&](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Uniform>) {
                return x + (1.0 - x) * uniform01(rng);
            } else if constexpr (std::is_same_v<K, MultiplicativeGap>) {
                return 1.0 - (1.0 - x) * k.xi.inverse_cdf(uniform01(rng));
            } else {
                // invert the piecewise-linear CDF on the table's y nodes
                const double u = uniform01(rng);
                const int m = k.table->m;
                double lo = x, flo = 0.0;
                for (int c = 1; c <= m; ++c) {
                    const double yc = static_cast<double>(c) / m;
                    if (yc <= x)
                        continue;
                    const double fc = cdf(yc, x);
                    if (fc >= u) {
                        const double t = fc > flo ? (u - flo) / (fc - flo) : 0.0;
                        return lo + t * (yc - lo);
                    }
                    lo = yc;
                    flo = fc;
                }
                return 1.0;
            }
        },
        impl_);
}

bool TransitionKernel::has_derivative() const
{
    if (const auto* t = std::get_if<Tabulated>(&impl_))
        return t->table->derivative.has_value();
    return true;
}

std::string TransitionKernel::name() const
{
    return std::visit(
        [](const auto& k) -> std::string {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Uniform>)
                return "uniform";
            else if constexpr (std::is_same_v<K, MultiplicativeGap>)
                return "multiplicative_gap[" + k.xi.label + "]";
            else
                return "tabulated[" + std::to_string(k.table->m) + "]";
        },
        impl_);
}

Discretization::Discretization(TransitionKernel kernel, Grid grid)
    : kernel_(std::move(kernel)), grid_(grid)
{
    if (kernel_.flat_in_y())
        return;
    const int n = grid_.n();
    const double h = grid_.h();
    row_offset_.resize(n + 1);
    std::size_t total = 0;
    for (int j = 0; j <= n; ++j) {
        row_offset_[j] = total;
        total += static_cast<std::size_t>(n - j + 1);
    }
    auto w = std::make_shared<std::vector<double>>(total);
    for (int j = 0; j < n; ++j) {
        const double xj = grid_.node(j);
        double* row = w->data() + row_offset_[j];
        double mass = 0.0;
        for (int k = j; k <= n; ++k) {
            const double tw = (k == j || k == n) ? 0.5 * h : h;
            const double q = kernel_.density(grid_.node(k), xj);
            row[k - j] = tw * q;
            mass += row[k - j];
        }
        if (!(mass > 0.0) || !std::isfinite(mass))
            throw SolverError("kernel row at x=" + std::to_string(xj) + " has no usable mass");
        for (int k = j; k <= n; ++k)
            row[k - j] /= mass;
    }
    (*w)[row_offset_[n]] = 1.0;
    weights_ = std::move(w);
}

std::vector<double> Discretization::expect(std::span<const double> f) const
{
    const int n = grid_.n();
    if (static_cast<int>(f.size()) != n + 1)
        throw std::invalid_argument("expect: size mismatch");
    std::vector<double> out(n + 1);
    out[n] = f[n];
    if (kernel_.flat_in_y()) {
        const double h = grid_.h();
        double tail = 0.0;
        for (int j = n - 1; j >= 0; --j) {
            tail += 0.5 * h * (f[j] + f[j + 1]);
            out[j] = tail / (1.0 - grid_.node(j));
        }
        return out;
    }
    for (int j = 0; j < n; ++j) {
        const double* row = weights_->data() + row_offset_[j];
        double s = 0.0;
        for (int k = j; k <= n; ++k)
            s += row[k - j] * f[k];
        out[j] = s;
    }
    return out;
}

GridFunction Discretization::expect(const GridFunction& f) const
{
    return GridFunction(grid_, expect(f.values()));
}

namespace {

std::vector<double> knots_between(const Grid& g, double a, double b)
{
    std::vector<double> pts{a};
    for (int j = g.floor_index(a) + 1; j < g.size(); ++j) {
        const double xj = g.node(j);
        if (xj >= b)
            break;
        if (xj > a)
            pts.push_back(xj);
    }
    pts.push_back(b);
    return pts;
}

} // namespace

double Discretization::integrate_against(double x, const std::function<double(double)>& f, double upper) const
{
    if (x >= upper)
        return 0.0;
    const auto pts = knots_between(grid_, x, upper);
    const auto w = trapezoid_weights(pts);
    double s = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        s += w[i] * f(pts[i]) * kernel_.density(pts[i], x);
    return s;
}

double Discretization::integrate_against_dx(double x, const std::function<double(double)>& f, double upper) const
{
    if (x >= upper)
        return 0.0;
    const auto pts = knots_between(grid_, x, upper);
    const auto w = trapezoid_weights(pts);
    double s = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        s += w[i] * f(pts[i]) * kernel_.density_dx(pts[i], x);
    return s;
}

std::string to_string(Verdict v)
{
    switch (v) {
    case Verdict::strict: return "strict";
    case Verdict::monotone: return "monotone";
    case Verdict::violated: return "violated";
    }
    return "?";
}

namespace {

Verdict worse(Verdict a, Verdict b) { return static_cast<int>(a) > static_cast<int>(b) ? a : b; }

} // namespace

MonotonicityReport check_stochastic_monotonicity(const TransitionKernel& kernel, const Grid& grid)
{
    const int n = grid.n();
    MonotonicityReport report;
    for (int m : {1, 2, 3, 5}) {
        FunctionVerdict fv;
        fv.test_function = "y^" + std::to_string(m);
        std::vector<double> phi(n);
        for (int j = 0; j < n; ++j) {
            const double xj = grid.node(j);
            std::vector<double> pts;
            for (int k = j; k <= n; ++k)
                pts.push_back(grid.node(k));
            const auto w = trapezoid_weights(pts);
            double s = 0.0, mass = 0.0;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const double q = w[i] * kernel.density(pts[i], xj);
                s += q * std::pow(pts[i], m);
                mass += q;
            }
            phi[j] = s / mass;
        }
        for (int j = 0; j + 1 < n; ++j) {
            const double d = phi[j + 1] - phi[j];
            const double eps = 1e-12 * std::max(1.0, std::abs(phi[j]));
            Verdict v = d > eps ? Verdict::strict : (d >= -eps ? Verdict::monotone : Verdict::violated);
            if (v != Verdict::strict && !fv.at)
                fv.at = std::make_pair(grid.node(j), grid.node(j + 1));
            fv.verdict = worse(fv.verdict, v);
        }
        report.overall = worse(report.overall, fv.verdict);
        report.functions.push_back(std::move(fv));
    }

    for (int j = 0; j + 1 < n; ++j) {
        const double x0 = grid.node(j), x1 = grid.node(j + 1);
        bool strict_somewhere = false;
        for (int k = 0; k <= n; ++k) {
            const double y = grid.node(k);
            const double d = kernel.cdf(y, x0) - kernel.cdf(y, x1);
            if (d < -1e-12)
                report.cdf_dominance = Verdict::violated;
            else if (d > 1e-12)
                strict_somewhere = true;
        }
        if (!strict_somewhere)
            report.cdf_dominance = worse(report.cdf_dominance, Verdict::monotone);
    }
    report.overall = worse(report.overall, report.cdf_dominance);
    return report;
}

double expected_hitting_time(const TransitionKernel& kernel, double theta, const Grid& grid)
{
    if (!(theta > 0.0 && theta < 1.0))
        throw std::invalid_argument("expected_hitting_time: theta must lie in (0,1)");
    const GridFunction ones(grid, std::vector<double>(grid.size(), 1.0));
    const auto sol = solve_volterra([&](double x, double y) { return kernel.density(y, x); }, ones,
                                    Direction::backward, theta);
    return sol.u[0];
}

} // namespace bmfg
