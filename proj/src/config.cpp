#include "nlhomog/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "nlhomog/errors.hpp"

namespace nlhomog {

namespace {

int line_of(const YAML::Node& node) { return node.Mark().is_null() ? 0 : node.Mark().line + 1; }

// A mapping node with its dotted path; remembers which keys were read so that
// leftovers can be reported as unknown.
class Block {
public:
    Block(YAML::Node node, std::string path, int fallback_line)
        : node_(std::move(node)), path_(std::move(path)), line_(fallback_line) {
        if (node_ && !node_.IsNull() && !node_.IsMap())
            throw ConfigError(path_, line_of(node_), "expected a mapping");
        if (node_ && node_.IsMap()) line_ = line_of(node_);
    }

    bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

    const std::string& path() const { return path_; }

    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

    int line(const std::string& k) const { return has(k) ? line_of(node_[k]) : line_; }
    int line() const { return line_; }

    YAML::Node raw(const std::string& k) {
        seen_.insert(k);
        return has(k) ? node_[k] : YAML::Node();
    }

    template <class T>
    T get(const std::string& k, T fallback) {
        seen_.insert(k);
        if (!has(k)) return fallback;
        const YAML::Node v = node_[k];
        try {
            return v.as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError(key(k), line_of(v), "cannot read value '" + scalar_text(v) + "'");
        }
    }

    template <class T>
    std::vector<T> get_list(const std::string& k, std::vector<T> fallback) {
        seen_.insert(k);
        if (!has(k)) return fallback;
        const YAML::Node v = node_[k];
        if (!v.IsSequence()) throw ConfigError(key(k), line_of(v), "expected a list");
        std::vector<T> out;
        for (const auto& item : v) {
            try {
                out.push_back(item.as<T>());
            } catch (const YAML::Exception&) {
                throw ConfigError(key(k), line_of(item), "cannot read list entry '" + scalar_text(item) + "'");
            }
        }
        return out;
    }

    Block child(const std::string& k) {
        seen_.insert(k);
        return Block(has(k) ? node_[k] : YAML::Node(), key(k), line(k));
    }

    void finish() const {
        if (!node_ || !node_.IsMap()) return;
        for (const auto& kv : node_) {
            const auto k = kv.first.as<std::string>();
            if (!seen_.count(k)) throw ConfigError(key(k), line_of(kv.first), "unknown key");
        }
    }

private:
    static std::string scalar_text(const YAML::Node& v) {
        if (v.IsScalar()) return v.Scalar();
        std::ostringstream os;
        os << v;
        return os.str();
    }

    YAML::Node node_;
    std::string path_;
    int line_ = 0;
    std::set<std::string> seen_;
};

// "auto" or a missing key gives 0.
double auto_or_number(Block& b, const std::string& k) {
    if (!b.has(k)) {
        b.raw(k);
        return 0.0;
    }
    const YAML::Node v = b.raw(k);
    if ((v.IsScalar() && v.Scalar() == "auto")) return 0.0;
    try {
        return v.as<double>();
    } catch (const YAML::Exception&) {
        throw ConfigError(b.key(k), line_of(v), "expected a number or 'auto'");
    }
}

template <class Fn>
void checked(const std::string& key, int line, Fn&& fn) {
    try {
        fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(key, line, e.what());
    }
}

void require(bool ok, Block& b, const std::string& k, const std::string& what) {
    if (!ok) throw ConfigError(b.key(k), b.line(k), what);
}

KernelSpec parse_kernel(Block b, int d) {
    KernelSpec k;
    const auto kind = b.get<std::string>("kind", "ball");
    checked(b.key("kind"), b.line("kind"), [&] { k.kind = kernel_kind_from_string(kind); });
    k.dim = d;
    switch (k.kind) {
        case KernelKind::ball_indicator:
            k.radius = b.get<double>("radius", 1.0);
            break;
        case KernelKind::power_decay:
            k.amplitude = b.get<double>("amplitude", 1.0);
            k.exponent = b.get<double>("exponent", 1.0);
            k.cutoff = b.get<double>("cutoff", 8.0);
            break;
        case KernelKind::stripe_indicator: {
            std::vector<double> c(d, 0.0);
            if (d > 1) c[1] = 0.5;
            k.center = b.get_list<double>("center", c);
            k.delta = b.get<double>("delta", 0.2);
            require(static_cast<int>(k.center.size()) == d, b, "center", "needs `dimension` entries");
            break;
        }
    }
    checked(b.path(), b.line(), [&] { k.validate(); });
    b.finish();
    return k;
}

Perforation parse_perforation(Block b, int d) {
    Perforation p;
    const auto kind = b.get<std::string>("kind", "none");
    PerforationKind pk{};
    checked(b.key("kind"), b.line("kind"), [&] { pk = perforation_kind_from_string(kind); });
    checked(b.path(), b.line(), [&] {
        const std::vector<double> mid(d, 0.5);
        switch (pk) {
            case PerforationKind::none:
                p = Perforation::none(d);
                break;
            case PerforationKind::ball: {
                auto c = b.get_list<double>("center", mid);
                require(static_cast<int>(c.size()) == d, b, "center", "needs `dimension` entries");
                p = Perforation::ball(c, b.get<double>("radius", 0.25));
                break;
            }
            case PerforationKind::box: {
                auto c = b.get_list<double>("center", mid);
                auto s = b.get_list<double>("half_sides", std::vector<double>(d, 0.25));
                require(static_cast<int>(c.size()) == d, b, "center", "needs `dimension` entries");
                require(static_cast<int>(s.size()) == d, b, "half_sides", "needs `dimension` entries");
                p = Perforation::box(c, s);
                break;
            }
            case PerforationKind::frame:
                p = Perforation::frame(d, b.get<double>("delta", 0.2));
                break;
        }
        p.validate();
    });
    b.finish();
    return p;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void set_seed(RunConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    cfg.hash = fnv1a64(cfg.source + "\nseed=" + std::to_string(seed));
}

double RunConfig::truncation_radius() const {
    return R > 0.0 ? R : default_truncation_radius(kernel, options.assembly.tail_tol);
}

RunConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("", e.mark.line + 1, e.msg);
    }
    RunConfig cfg;
    cfg.source = text;
    Block top(root, "", 1);

    cfg.dimension = top.get<int>("dimension", 2);
    require(cfg.dimension >= 1 && cfg.dimension <= 3, top, "dimension", "must be 1, 2 or 3");
    const int d = cfg.dimension;
    cfg.seed = top.get<std::uint64_t>("seed", 0);
    cfg.rng = top.get<std::string>("rng", "mt19937_64");
    require(cfg.rng == "mt19937_64", top, "rng", "only 'mt19937_64' is available");
    cfg.output = top.get<std::string>("output", "out");

    cfg.kernel = parse_kernel(top.child("kernel"), d);
    cfg.perforation = parse_perforation(top.child("perforation"), d);

    {
        Block g = top.child("grid");
        cfg.n = g.get<int>("n", 32);
        require(cfg.n >= 4, g, "n", "must be >= 4");
        cfg.cells = g.get<int>("cells", 1);
        require(cfg.cells >= 1, g, "cells", "must be >= 1");
        cfg.R = auto_or_number(g, "R");
        require(cfg.R >= 0.0, g, "R", "must be > 0 or 'auto'");
        g.finish();
    }
    {
        Block s = top.child("solver");
        auto& so = cfg.options.solver;
        auto& as = cfg.options.assembly;
        so.tol = s.get<double>("tol", so.tol);
        require(so.tol > 0.0, s, "tol", "must be > 0");
        so.max_iter = s.get<int>("max_iter", so.max_iter);
        require(so.max_iter > 0, s, "max_iter", "must be > 0");
        so.threads = s.get<int>("threads", so.threads);
        require(so.threads >= 1, s, "threads", "must be >= 1");
        as.tail_tol = s.get<double>("tail_tol", as.tail_tol);
        require(as.tail_tol > 0.0, s, "tail_tol", "must be > 0");
        as.memory_cap_mb = s.get<double>("memory_cap_mb", as.memory_cap_mb);
        require(as.memory_cap_mb > 0.0, s, "memory_cap_mb", "must be > 0");
        s.finish();
    }
    {
        Block c = top.child("cell");
        cfg.consistency_tol = c.get<double>("consistency_tol", cfg.consistency_tol);
        require(cfg.consistency_tol > 0.0, c, "consistency_tol", "must be > 0");
        c.finish();
    }
    {
        Block g = top.child("gamma");
        auto& gc = cfg.gamma;
        gc.T_list = g.get_list<int>("T_list", gc.T_list);
        require(!gc.T_list.empty(), g, "T_list", "must not be empty");
        for (std::size_t i = 0; i < gc.T_list.size(); ++i) {
            require(gc.T_list[i] >= 2, g, "T_list", "entries must be integers >= 2");
            require(i == 0 || gc.T_list[i] > gc.T_list[i - 1], g, "T_list", "must be strictly ascending");
        }
        gc.delta_rule = g.get<std::string>("delta_rule", gc.delta_rule);
        checked(g.key("delta_rule"), g.line("delta_rule"), [&] { delta_rule_from_string(gc.delta_rule); });
        gc.periodic = g.get<bool>("periodic", gc.periodic);
        if (g.has("directions")) {
            const YAML::Node dirs = g.raw("directions");
            if (!dirs.IsSequence()) throw ConfigError(g.key("directions"), line_of(dirs), "expected a list");
            for (const auto& item : dirs) {
                try {
                    gc.directions.push_back(item.as<std::vector<double>>());
                } catch (const YAML::Exception&) {
                    throw ConfigError(g.key("directions"), line_of(item), "each direction must be a list of numbers");
                }
                if (static_cast<int>(gc.directions.back().size()) != d)
                    throw ConfigError(g.key("directions"), line_of(item), "each direction needs `dimension` entries");
            }
        }
        g.raw("directions");
        if (gc.directions.empty()) {
            gc.directions.assign(1, std::vector<double>(d, 0.0));
            gc.directions[0][0] = 1.0;
        }
        g.finish();
    }
    {
        Block e = top.child("extend");
        auto& ec = cfg.extend;
        ec.tau = e.get<double>("tau", ec.tau);
        require(ec.tau > 0.0, e, "tau", "must be > 0");
        ec.max_distortion = e.get<double>("max_distortion", ec.max_distortion);
        require(ec.max_distortion >= 1.0, e, "max_distortion", "must be >= 1");
        ec.eps = e.get_list<double>("eps", ec.eps);
        require(!ec.eps.empty(), e, "eps", "must not be empty");
        ec.L = e.get<double>("L", ec.L);
        require(ec.L > 0.0, e, "L", "must be > 0");
        for (double eps : ec.eps) {
            const double cells = ec.L / eps;
            require(eps > 0.0 && std::abs(cells - std::round(cells)) < 1e-9, e, "eps",
                    "every entry must divide L into an integer number of cells");
        }
        ec.samples = e.get<int>("samples", ec.samples);
        require(ec.samples >= 1, e, "samples", "must be >= 1");
        ec.r0 = e.get<double>("r0", ec.r0);
        require(ec.r0 > 0.0, e, "r0", "must be > 0");
        ec.r = auto_or_number(e, "r");
        ec.margin = auto_or_number(e, "margin");
        ec.max_window_cells = e.get<int>("max_window_cells", ec.max_window_cells);
        require(ec.max_window_cells >= 1, e, "max_window_cells", "must be >= 1");
        ec.stability_factor = e.get<double>("stability_factor", ec.stability_factor);
        require(ec.stability_factor >= 1.0, e, "stability_factor", "must be >= 1");
        ec.localization_r = e.get<double>("localization_r", ec.localization_r);
        require(ec.localization_r > 0.0, e, "localization_r", "must be > 0");
        ec.localization_n = e.get<int>("localization_n", ec.localization_n);
        require(ec.localization_n >= 4, e, "localization_n", "must be >= 4");
        ec.localization_samples = e.get<int>("localization_samples", ec.localization_samples);
        require(ec.localization_samples >= 1, e, "localization_samples", "must be >= 1");
        e.finish();
    }
    {
        Block g = top.child("degenerate");
        auto& dc = cfg.degenerate;
        dc.delta = g.get<double>("delta", dc.delta);
        require(dc.delta > 0.0 && dc.delta < 0.25, g, "delta", "must satisfy 0 < delta < 1/4");
        dc.n_list = g.get_list<int>("n_list", dc.n_list);
        require(dc.n_list.size() >= 2, g, "n_list", "needs at least two resolutions");
        for (std::size_t i = 0; i < dc.n_list.size(); ++i)
            require(dc.n_list[i] >= 4 && (i == 0 || dc.n_list[i] > dc.n_list[i - 1]), g, "n_list",
                    "entries must be >= 4 and strictly ascending");
        dc.decrease_factor = g.get<double>("decrease_factor", dc.decrease_factor);
        require(dc.decrease_factor >= 1.0, g, "decrease_factor", "must be >= 1");
        dc.hypothesis_c = g.get<double>("hypothesis_c", dc.hypothesis_c);
        require(dc.hypothesis_c > 0.0, g, "hypothesis_c", "must be > 0");
        dc.hypothesis_r0 = g.get<double>("hypothesis_r0", dc.hypothesis_r0);
        require(dc.hypothesis_r0 > 0.0, g, "hypothesis_r0", "must be > 0");
        dc.hypothesis_samples = g.get<int>("hypothesis_samples", dc.hypothesis_samples);
        require(dc.hypothesis_samples >= 1, g, "hypothesis_samples", "must be >= 1");
        g.finish();
    }
    {
        Block k = top.child("kernel_info");
        cfg.kernel_info.step = k.get<double>("step", cfg.kernel_info.step);
        require(cfg.kernel_info.step > 0.0, k, "step", "must be > 0");
        cfg.kernel_info.tail_tol = k.get<double>("tail_tol", cfg.kernel_info.tail_tol);
        require(cfg.kernel_info.tail_tol > 0.0, k, "tail_tol", "must be > 0");
        k.finish();
    }
    top.finish();
    set_seed(cfg, cfg.seed);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", 0, "cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace nlhomog
