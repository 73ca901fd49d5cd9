#include "config.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>

namespace avm::cli {

using nlohmann::json;

namespace {

/// A JSON object together with its dotted path, for error messages.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) fail(path_, "expected an object");
    }

    bool has(const char* key) const { return node_.contains(key); }
    std::string path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    Section section(const char* key) const {
        if (!has(key)) fail(path(key), "missing required section");
        return {node_.at(key), path(key)};
    }
    std::optional<Section> optional_section(const char* key) const {
        if (!has(key)) return std::nullopt;
        return Section(node_.at(key), path(key));
    }

    double number(const char* key) const {
        if (!has(key)) fail(path(key), "missing required field");
        return as_number(node_.at(key), path(key));
    }
    double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

    int integer(const char* key) const {
        if (!has(key)) fail(path(key), "missing required field");
        const json& v = node_.at(key);
        if (!v.is_number_integer()) fail(path(key), "expected an integer");
        return v.get<int>();
    }
    int integer(const char* key, int fallback) const { return has(key) ? integer(key) : fallback; }

    bool boolean(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        if (!node_.at(key).is_boolean()) fail(path(key), "expected true or false");
        return node_.at(key).get<bool>();
    }

    std::string string(const char* key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        if (!node_.at(key).is_string()) fail(path(key), "expected a string");
        return node_.at(key).get<std::string>();
    }

    std::vector<double> numbers(const char* key) const {
        if (!has(key)) fail(path(key), "missing required field");
        const json& v = node_.at(key);
        if (!v.is_array()) fail(path(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path(key) + "[" + std::to_string(i) + "]"));
        return out;
    }

    const json& raw(const char* key) const { return node_.at(key); }

    [[noreturn]] static void fail(const std::string& where, const std::string& what) {
        throw ConfigError(where + ": " + what);
    }

private:
    static double as_number(const json& v, const std::string& where) {
        if (!v.is_number()) fail(where, "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(where, "expected a finite number");
        return x;
    }

    const json& node_;
    std::string path_;
};

void require(bool ok, const std::string& where, const std::string& what) {
    if (!ok) Section::fail(where, what);
}

numerics::IntegratorSpec parse_integrator(const Section& s) {
    numerics::IntegratorSpec spec;
    const std::string method = s.string("method", "rk45");
    if (method == "rk45")
        spec.method = numerics::OdeMethod::RK45Adaptive;
    else if (method == "rk4")
        spec.method = numerics::OdeMethod::RK4Fixed;
    else
        Section::fail(s.path("method"), "expected \"rk45\" or \"rk4\"");
    spec.abs_tol = s.number("abs_tol", spec.abs_tol);
    spec.rel_tol = s.number("rel_tol", spec.rel_tol);
    spec.max_step = s.number("max_step", spec.max_step);
    spec.initial_step = s.number("initial_step", spec.initial_step);
    if (s.has("max_steps")) {
        const int n = s.integer("max_steps");
        require(n > 0, s.path("max_steps"), "must be positive");
        spec.max_steps = static_cast<std::size_t>(n);
    }
    try {
        spec.validate();
    } catch (const std::exception& e) {
        Section::fail(s.path("method"), e.what());
    }
    return spec;
}

numerics::QuadratureSpec parse_quadrature(const Section& s) {
    numerics::QuadratureSpec spec;
    const std::string method = s.string("method", "simpson");
    if (method == "simpson")
        spec.method = numerics::QuadratureMethod::AdaptiveSimpson;
    else if (method == "gauss-legendre")
        spec.method = numerics::QuadratureMethod::GaussLegendreComposite;
    else
        Section::fail(s.path("method"), "expected \"simpson\" or \"gauss-legendre\"");
    spec.abs_tol = s.number("abs_tol", spec.abs_tol);
    spec.max_subdivisions = static_cast<std::size_t>(s.integer("max_subdivisions", static_cast<int>(spec.max_subdivisions)));
    spec.panels = s.integer("panels", spec.panels);
    require(spec.abs_tol > 0.0, s.path("abs_tol"), "must be positive");
    require(spec.max_subdivisions >= 1, s.path("max_subdivisions"), "must be >= 1");
    require(spec.panels >= 1, s.path("panels"), "must be >= 1");
    return spec;
}

numerics::RootSpec parse_root(const Section& s, numerics::RootSpec spec) {
    spec.residual_tol = s.number("residual_tol", spec.residual_tol);
    spec.step_tol = s.number("step_tol", spec.step_tol);
    spec.max_iter = s.integer("max_iter", spec.max_iter);
    spec.fd_jacobian_step = s.number("fd_jacobian_step", spec.fd_jacobian_step);
    try {
        spec.validate();
    } catch (const std::exception& e) {
        Section::fail(s.path("residual_tol"), e.what());
    }
    return spec;
}

/// A grid given either as "values": [...] or as {min, max, steps[, log]}.
std::vector<double> parse_grid(const Section& s) {
    if (s.has("values")) {
        auto v = s.numbers("values");
        require(!v.empty(), s.path("values"), "grid must not be empty");
        return v;
    }
    const double lo = s.number("min"), hi = s.number("max");
    const int steps = s.integer("steps");
    const bool log = s.boolean("log", false);
    require(steps >= 1, s.path("steps"), "must be >= 1");
    require(hi >= lo, s.path("max"), "must be >= min");
    require(!log || lo > 0.0, s.path("min"), "log grid needs min > 0");
    std::vector<double> out;
    for (int i = 0; i < steps; ++i) {
        const double t = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
        out.push_back(log ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t);
    }
    return out;
}

/// Radius grid from "rho" or from first-integral levels "K".
std::vector<double> parse_radii(const Section& s, const slowflow::SlowFlowParams& p) {
    if (s.has("rho")) return parse_grid(s.section("rho"));
    if (!s.has("K")) Section::fail(s.path("rho"), "missing required field (give \"rho\" or \"K\")");
    std::vector<double> out;
    for (double K : parse_grid(s.section("K"))) {
        require(K > 0.0 && K < 1.0, s.path("K"), "levels must lie in (0, 1)");
        out.push_back(slowflow::rho_for_K(K, p.k, p.P));
    }
    return out;
}

double parse_radius(const Section& s, const slowflow::SlowFlowParams& p) {
    if (s.has("rho")) return s.number("rho");
    if (!s.has("K")) Section::fail(s.path("rho"), "missing required field (give \"rho\" or \"K\")");
    const double K = s.number("K");
    require(K > 0.0 && K < 1.0, s.path("K"), "must lie in (0, 1)");
    return slowflow::rho_for_K(K, p.k, p.P);
}

lattice::LatticeConfig parse_lattice_model(const Section& s) {
    lattice::LatticeConfig cfg;
    cfg.N = s.integer("N");
    require(cfg.N >= 1, s.path("N"), "must be >= 1");
    cfg.c = s.number("c", 0.0);
    require(cfg.c >= 0.0, s.path("c"), "must be non-negative");
    if (s.has("forcing")) {
        const json& arr = s.raw("forcing");
        require(arr.is_array(), s.path("forcing"), "expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const Section f(arr[i], s.path("forcing") + "[" + std::to_string(i) + "]");
            lattice::ForcingEntry e;
            e.p = f.integer("p");
            require(e.p >= 1 && e.p <= cfg.N, f.path("p"), "mode index must lie in 1..N");
            e.amplitude = f.number("amplitude");
            if (f.has("frequency")) e.drive_frequency = f.number("frequency");
            cfg.forcing.push_back(e);
        }
    }
    return cfg;
}

LatticeRun parse_lattice(const Section& s) {
    LatticeRun run;
    run.lattice = parse_lattice_model(s);
    const int N = run.lattice.N;
    const std::string model = s.string("model", "exact");
    if (model == "exact")
        run.model = LatticeRun::Model::Exact;
    else if (model == "reduced")
        run.model = LatticeRun::Model::Reduced;
    else
        Section::fail(s.path("model"), "expected \"exact\" or \"reduced\"");
    run.horizon = s.number("horizon");
    require(run.horizon > 0.0, s.path("horizon"), "must be positive");
    run.samples = s.integer("samples", run.samples);
    require(run.samples >= 2, s.path("samples"), "must be >= 2");
    run.velocities = s.boolean("velocities", false);

    run.initial = lattice::LatticeState::zeros(N);
    if (const auto init = s.optional_section("initial")) {
        if (init->has("mode")) {
            const int p = init->integer("mode");
            require(p >= 1 && p <= N, init->path("mode"), "mode index must lie in 1..N");
            const double a = init->number("amplitude");
            const Eigen::VectorXd phi = lattice::mode_shape(p, N);
            const double scale = a / phi.cwiseAbs().maxCoeff();
            for (int i = 0; i < N; ++i) run.initial.w[static_cast<std::size_t>(i)] = scale * phi[i];
        }
        auto vec = [&](const char* key, std::vector<double>& dst) {
            if (!init->has(key)) return;
            auto v = init->numbers(key);
            require(static_cast<int>(v.size()) == N, init->path(key), "expected N entries");
            dst = std::move(v);
        };
        vec("s", run.initial.s);
        vec("w", run.initial.w);
        vec("ds", run.initial.ds);
        vec("dw", run.initial.dw);
    }
    return run;
}

slowflow::SlowFlowParams parse_slowflow(const Section& s) {
    slowflow::SlowFlowParams p;
    p.P = s.number("P", p.P);
    p.k = s.integer("k", p.k);
    p.eps = s.number("eps", p.eps);
    p.mu1 = s.number("mu1", p.mu1);
    p.mu2 = s.number("mu2", p.mu2);
    p.beta1 = s.number("beta1", p.beta1);
    try {
        p.validate();
    } catch (const std::exception& e) {
        Section::fail(s.path("P"), e.what());
    }
    return p;
}

OrbitsRun parse_orbits(const Section& s) {
    OrbitsRun run;
    run.theta0 = s.numbers("theta0");
    require(!run.theta0.empty(), s.path("theta0"), "must not be empty");
    for (double t : run.theta0)
        require(t > 0.0 && t <= 0.25 * std::numbers::pi + 1e-12, s.path("theta0"), "values must lie in (0, pi/4]");
    run.periods = s.number("periods", run.periods);
    require(run.periods > 0.0, s.path("periods"), "must be positive");
    run.samples = s.integer("samples", run.samples);
    require(run.samples >= 2, s.path("samples"), "must be >= 2");
    return run;
}

MelnikovRun parse_melnikov(const Section& s, const slowflow::SlowFlowParams& p) {
    MelnikovRun run;
    run.betas = parse_grid(s.section("beta1"));
    run.rhos = parse_radii(s, p);
    const double thr = slowflow::family_threshold(p.k, p.P);
    for (double r : run.rhos) require(r > thr, s.path("rho"), "radii must exceed the family threshold 2kP^2 sqrt(k)");
    run.seeds = {};
    for (double b : melnikov::asymptotic_root_seeds()) run.seeds.push_back(b);
    if (const auto c = s.optional_section("continuation")) {
        run.continuation = c->boolean("enabled", true);
        run.cont.rho_factor = c->number("factor", run.cont.rho_factor);
        require(run.cont.rho_factor > 0.0 && run.cont.rho_factor < 1.0, c->path("factor"), "must lie in (0, 1)");
        run.cont.threshold_margin = c->number("margin", run.cont.threshold_margin);
        run.cont.max_steps = c->integer("max_steps", run.cont.max_steps);
        if (c->has("seeds")) run.seeds = c->numbers("seeds");
        if (c->has("rho_start") || c->has("K_start")) {
            run.cont.rho_start = c->has("rho_start") ? c->number("rho_start")
                                                     : slowflow::rho_for_K(c->number("K_start"), p.k, p.P);
        }
    }
    if (run.cont.rho_start == 0.0) {
        double largest = 0.0;
        for (double r : run.rhos) largest = std::max(largest, r);
        run.cont.rho_start = largest;
    }
    return run;
}

PersistRun parse_persist(const Section& s, const slowflow::SlowFlowParams& p) {
    PersistRun run;
    run.rho = parse_radius(s, p);
    require(run.rho > slowflow::family_threshold(p.k, p.P), s.path("rho"), "must exceed the family threshold");
    run.seed_beta1 = s.number("seed_beta1", 0.0);
    run.eps = s.numbers("eps");
    require(!run.eps.empty(), s.path("eps"), "must not be empty");
    for (double e : run.eps) require(e >= 0.0, s.path("eps"), "values must be non-negative");
    const std::string mode = s.string("parameterization", "state");
    if (mode == "state")
        run.mode = PersistRun::Mode::State;
    else if (mode == "adjust-beta")
        run.mode = PersistRun::Mode::AdjustBeta;
    else
        Section::fail(s.path("parameterization"), "expected \"state\" or \"adjust-beta\"");
    if (const auto sh = s.optional_section("shooting")) {
        if (sh->has("integrator")) run.shooting.integrator = parse_integrator(sh->section("integrator"));
        if (sh->has("newton")) run.shooting.newton = parse_root(sh->section("newton"), run.shooting.newton);
        run.shooting.distance_samples = sh->integer("distance_samples", run.shooting.distance_samples);
        run.shooting.homotopy_levels = sh->integer("homotopy_levels", run.shooting.homotopy_levels);
        require(run.shooting.distance_samples >= 2, sh->path("distance_samples"), "must be >= 2");
        require(run.shooting.homotopy_levels >= 0, sh->path("homotopy_levels"), "must be non-negative");
    }
    return run;
}

} // namespace

bool RunConfig::wants(const std::string& format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
}

RunConfig parse_config(const json& doc, const std::string& command) {
    const Section root(doc, "");
    RunConfig cfg;
    cfg.source = doc;

    if (const auto num = root.optional_section("numerics")) {
        if (num->has("integrator")) cfg.numerics.integrator = parse_integrator(num->section("integrator"));
        if (num->has("quadrature")) cfg.numerics.quadrature = parse_quadrature(num->section("quadrature"));
        if (num->has("root")) cfg.numerics.root = parse_root(num->section("root"), cfg.numerics.root);
    }
    if (const auto out = root.optional_section("output")) {
        if (out->has("formats")) {
            const json& f = out->raw("formats");
            require(f.is_array(), out->path("formats"), "expected an array of strings");
            cfg.formats.clear();
            for (const auto& v : f) {
                require(v.is_string(), out->path("formats"), "expected an array of strings");
                const auto name = v.get<std::string>();
                require(name == "csv" || name == "json" || name == "svg", out->path("formats"),
                        "unknown format \"" + name + "\"");
                cfg.formats.push_back(name);
            }
        }
    }

    if (command == "lattice") {
        cfg.lattice = parse_lattice(root.section("lattice"));
    } else {
        if (command != "orbits") cfg.slowflow = parse_slowflow(root.section("slowflow"));
        if (command == "orbits")
            cfg.orbits = parse_orbits(root.section("orbits"));
        else if (command == "melnikov")
            cfg.melnikov = parse_melnikov(root.section("melnikov"), cfg.slowflow);
        else if (command == "persist")
            cfg.persist = parse_persist(root.section("persist"), cfg.slowflow);
        else
            throw ConfigError("command: unknown analysis \"" + command + "\"");
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const std::string& command) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    json doc;
    try {
        doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(doc, command);
}

std::string config_hash(const json& doc) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : doc.dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

} // namespace avm::cli
