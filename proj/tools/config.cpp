#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace bmfg::cli {

namespace {

class Node {
public:
    Node(const Json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            fail("expected an object");
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }
    [[noreturn]] void fail(const std::string& key, const std::string& msg) const
    {
        throw ConfigError(sub(key) + ": " + msg);
    }

    std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const Json* find(const std::string& key)
    {
        auto it = j_.find(key);
        if (it == j_.end())
            return nullptr;
        seen_.insert(key);
        return &*it;
    }

    double number(const std::string& key, double def)
    {
        const Json* v = find(key);
        if (!v)
            return def;
        if (!v->is_number())
            fail(key, "expected a number");
        return v->get<double>();
    }

    long integer(const std::string& key, long def)
    {
        const Json* v = find(key);
        if (!v)
            return def;
        if (!v->is_number_integer())
            fail(key, "expected an integer");
        return v->get<long>();
    }

    std::string string(const std::string& key, const std::string& def)
    {
        const Json* v = find(key);
        if (!v)
            return def;
        if (!v->is_string())
            fail(key, "expected a string");
        return v->get<std::string>();
    }

    std::optional<Node> child(const std::string& key)
    {
        const Json* v = find(key);
        if (!v)
            return std::nullopt;
        return Node(*v, sub(key));
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                fail(it.key(), "unknown key");
    }

    const std::string& path() const { return path_; }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::vector<std::pair<double, double>> read_pairs(const std::filesystem::path& p, const std::string& field)
{
    std::ifstream in(p);
    if (!in)
        throw ConfigError(field + ": cannot open " + p.string());
    std::vector<std::pair<double, double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
            continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double a, b;
        if (!(ss >> a >> b)) {
            if (rows.empty())
                continue; // header
            throw ConfigError(field + ": " + p.string() + ":" + std::to_string(lineno) + ": expected two numbers");
        }
        rows.emplace_back(a, b);
    }
    return rows;
}

CostComponent parse_component(Node node, double default_offset, const std::filesystem::path& base)
{
    const std::string family = node.string("family", "linear");
    const double offset = node.number("offset", default_offset);
    CostComponent c;
    if (family == "linear") {
        c = CostComponent::linear(node.number("slope", 1.0), offset);
    } else if (family == "power") {
        const double k = node.number("k", 1.0);
        if (!(k > 0.0))
            node.fail("k", "must be positive");
        c = CostComponent::power(k, offset);
    } else if (family == "tabulated") {
        const std::string file = node.string("csv", "");
        if (file.empty())
            node.fail("csv", "required for the tabulated family");
        auto rows = read_pairs(base / file, node.sub("csv"));
        std::vector<double> t, v;
        for (auto [a, b] : rows) {
            t.push_back(a);
            v.push_back(b);
        }
        try {
            c = CostComponent::tabulated(std::move(t), std::move(v), offset);
        } catch (const std::invalid_argument& e) {
            node.fail("csv", e.what());
        }
    } else {
        node.fail("family", "unknown family '" + family + "' (linear, power, tabulated)");
    }
    node.finish();
    return c;
}

TransitionKernel parse_kernel(Node node, const std::filesystem::path& base)
{
    const std::string type = node.string("type", "uniform");
    TransitionKernel k = TransitionKernel::uniform();
    if (type == "uniform") {
    } else if (type == "gap") {
        const double a = node.number("exponent", 1.0);
        if (!(a >= 1.0))
            node.fail("exponent", "must be >= 1");
        k = TransitionKernel::multiplicative_gap(GapDensity::power(a));
    } else if (type == "tabulated") {
        const std::string dens = node.string("density_csv", "");
        if (dens.empty())
            node.fail("density_csv", "required for the tabulated kernel");
        const std::string deriv = node.string("derivative_csv", "");
        try {
            std::optional<std::filesystem::path> dpath;
            if (!deriv.empty())
                dpath = base / deriv;
            k = TransitionKernel::tabulated(DensityTable::load_csv(base / dens, dpath));
        } catch (const std::exception& e) {
            node.fail("density_csv", e.what());
        }
    } else {
        node.fail("type", "unknown kernel '" + type + "' (uniform, gap, tabulated)");
    }
    node.finish();
    return k;
}

Threshold parse_policy(Node& node, const std::string& key)
{
    const Json* v = node.find(key);
    if (v->is_number()) {
        const double x = v->get<double>();
        if (!(x > 0.0 && x < 1.0))
            node.fail(key, "numeric threshold must lie in (0,1)");
        return Threshold::interior(x);
    }
    if (!v->is_string())
        node.fail(key, "expected a number or one of equilibrium, zero, one, above_one");
    const std::string s = v->get<std::string>();
    if (s == "zero")
        return Threshold::zero();
    if (s == "one")
        return Threshold::one();
    if (s == "above_one")
        return Threshold::above_one();
    node.fail(key, "unknown policy '" + s + "'");
}

// {family: linear, slope: 1, offset: expected}
bool is_identity(const Json* j, double expected_offset)
{
    return j->value("family", std::string("linear")) == "linear" && j->value("slope", 1.0) == 1.0 &&
           j->value("offset", expected_offset) == expected_offset;
}

} // namespace

GameModel RunConfig::model() const { return GameModel(kernel, cost, Grid(n), tol); }

RunConfig parse_config(const Json& j, const std::filesystem::path& base)
{
    RunConfig cfg;
    Node root(j, "");

    if (auto model = root.child("model")) {
        if (auto k = model->child("kernel"))
            cfg.kernel = parse_kernel(std::move(*k), base);
        const double c = model->number("c", 0.2);
        const double gamma = model->number("gamma", 0.5);
        const double beta = model->number("beta", 0.9);
        if (!(beta > 0.0 && beta < 1.0))
            model->fail("beta", "must lie in (0,1)");
        if (!(gamma > 0.0))
            model->fail("gamma", "must be positive");
        CostComponent r1 = CostComponent::linear();
        CostComponent r2 = CostComponent::linear(1.0, c);
        cfg.linear_c = c;
        if (auto n = model->child("r1")) {
            r1 = parse_component(std::move(*n), 0.0, base);
            if (!is_identity(model->find("r1"), 0.0))
                cfg.linear_c.reset();
        }
        if (auto n = model->child("r2")) {
            r2 = parse_component(std::move(*n), c, base);
            if (!is_identity(model->find("r2"), c))
                cfg.linear_c.reset();
        }
        cfg.cost = CostModel::product(std::move(r1), std::move(r2), gamma, beta);
        model->finish();
    }

    if (auto num = root.child("numerics")) {
        cfg.n = static_cast<int>(num->integer("n", cfg.n));
        if (cfg.n < 2)
            num->fail("n", "must be >= 2");
        cfg.tol.bellman = num->number("bellman_tol", cfg.tol.bellman);
        cfg.tol.fixed_point = num->number("fixed_point_tol", cfg.tol.fixed_point);
        cfg.tol.threshold = num->number("threshold_tol", cfg.tol.threshold);
        cfg.tol.max_bisection = static_cast<int>(num->integer("max_bisection", cfg.tol.max_bisection));
        if (!(cfg.tol.bellman > 0.0))
            num->fail("bellman_tol", "must be positive");
        if (!(cfg.tol.fixed_point > 0.0))
            num->fail("fixed_point_tol", "must be positive");
        if (cfg.tol.max_bisection < 1)
            num->fail("max_bisection", "must be >= 1");
        num->finish();
    }

    if (auto cmd = root.child("command")) {
        if (auto s = cmd->child("sensitivity")) {
            cfg.sensitivity.eps = s->number("eps", cfg.sensitivity.eps);
            if (!(cfg.sensitivity.eps > 0.0))
                s->fail("eps", "must be positive");
            const std::string route = s->string("z_prime", "auto");
            if (route == "auto")
                cfg.sensitivity.z_prime = MeanDerivative::automatic;
            else if (route == "closed_form")
                cfg.sensitivity.z_prime = MeanDerivative::closed_form;
            else if (route == "finite_difference")
                cfg.sensitivity.z_prime = MeanDerivative::finite_difference;
            else
                s->fail("z_prime", "expected auto, closed_form or finite_difference");
            s->finish();
        }
        if (auto c = cmd->child("curve")) {
            cfg.curve.rho = c->number("rho", cfg.curve.rho);
            if (!(cfg.curve.rho > 0.0 && cfg.curve.rho < 1.0))
                c->fail("rho", "must lie in (0,1)");
            cfg.curve.points = static_cast<int>(c->integer("points", cfg.curve.points));
            if (cfg.curve.points < 2)
                c->fail("points", "must be >= 2");
            if (const Json* t = c->find("thetas")) {
                if (!t->is_array())
                    c->fail("thetas", "expected an array");
                cfg.curve.thetas.clear();
                for (std::size_t i = 0; i < t->size(); ++i) {
                    const Json& e = (*t)[i];
                    if (!e.is_number() || !(e.get<double>() > 0.0 && e.get<double>() < 1.0))
                        c->fail("thetas[" + std::to_string(i) + "]", "expected a number in (0,1)");
                    cfg.curve.thetas.push_back(e.get<double>());
                }
            }
            c->finish();
        }
        if (auto s = cmd->child("simulate")) {
            auto& o = cfg.simulate;
            o.agents = static_cast<int>(s->integer("agents", o.agents));
            o.horizon = static_cast<int>(s->integer("horizon", o.horizon));
            o.burn_in = static_cast<int>(s->integer("burn_in", o.burn_in));
            o.histogram_bins = static_cast<int>(s->integer("histogram_bins", o.histogram_bins));
            o.cycles = s->integer("cycles", o.cycles);
            o.cost_replications = s->integer("cost_replications", o.cost_replications);
            if (o.agents < 1)
                s->fail("agents", "must be >= 1");
            if (o.burn_in < 0 || o.horizon <= o.burn_in)
                s->fail("horizon", "must exceed burn_in >= 0");
            if (o.histogram_bins < 1)
                s->fail("histogram_bins", "must be >= 1");
            if (o.cycles != 0 && o.cycles < 100)
                s->fail("cycles", "must be 0 or >= 100");
            if (o.cost_replications < 0 || o.cost_replications == 1)
                s->fail("cost_replications", "must be 0 or >= 2");
            const std::string law = s->string("initial_law", "all_zero");
            if (law == "all_zero")
                o.initial_law = InitialLaw::all_zero;
            else if (law == "uniform")
                o.initial_law = InitialLaw::uniform;
            else if (law == "stationary")
                o.initial_law = InitialLaw::custom;
            else
                s->fail("initial_law", "expected all_zero, uniform or stationary");
            if (const Json* p = s->find("policy"); p && !(p->is_string() && p->get<std::string>() == "equilibrium"))
                o.policy = parse_policy(*s, "policy");
            s->finish();
        }
        cmd->finish();
    }

    if (auto out = root.child("output")) {
        cfg.out_dir = base / out->string("dir", cfg.out_dir.string());
        if (const Json* f = out->find("formats")) {
            if (!f->is_array())
                out->fail("formats", "expected an array");
            cfg.write_csv = false;
            for (const auto& e : *f) {
                if (e == "csv")
                    cfg.write_csv = true;
                else if (e != "json")
                    out->fail("formats", "entries must be json or csv");
            }
        }
        out->finish();
    }

    const long seed = root.integer("seed", 1);
    if (seed < 0)
        root.fail("seed", "must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.threads = static_cast<int>(root.integer("threads", 1));
    if (cfg.threads < 1)
        root.fail("threads", "must be >= 1");
    root.finish();

    try {
        cfg.cost.validate(Grid(cfg.n));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path.string() + ": cannot open");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const long line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
        throw ConfigError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
    return parse_config(j, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

} // namespace bmfg::cli
