#include "varint/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace varint {

using nlohmann::json;

namespace {

/// Typed access to a JSON object that remembers the field path for messages
/// and rejects keys nobody asked about.
class Fields {
public:
    Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) fail(path_.empty() ? "config" : path_, "must be an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return obj_.contains(key);
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        if (!obj_.contains(key)) fail(name(key), "is required");
        return obj_.at(key);
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    double number(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number()) fail(name(key), "must be a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail(name(key), "must be finite");
        return d;
    }

    long long integer(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number_integer()) fail(name(key), "must be an integer");
        return v.get<long long>();
    }

    int int32(const std::string& key, long long lo) {
        const long long v = integer(key);
        if (v < lo || v > 2147483647LL) fail(name(key), "must be an integer >= " + std::to_string(lo));
        return static_cast<int>(v);
    }

    std::string string(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) fail(name(key), "must be a string");
        return v.get<std::string>();
    }

    bool boolean(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_boolean()) fail(name(key), "must be true or false");
        return v.get<bool>();
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!seen_.count(it.key())) fail(name(it.key()), "is not a recognized key");
    }

    [[noreturn]] static void fail(const std::string& field, const std::string& msg) {
        throw ConfigError("field '" + field + "' " + msg);
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

Eigen::VectorXd vector_of(const json& v, const std::string& field) {
    if (!v.is_array()) Fields::fail(field, "must be an array of numbers");
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) Fields::fail(field, "must be an array of numbers");
        out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
        if (!std::isfinite(out(static_cast<Eigen::Index>(i)))) Fields::fail(field, "must be finite");
    }
    return out;
}

Scheme scheme_from(const std::string& s) {
    for (Scheme sc : {Scheme::TrapezoidalFirstOrder, Scheme::AlphaTrapezoidal, Scheme::Lobatto2,
                      Scheme::Gauss2})
        if (s == to_string(sc)) return sc;
    Fields::fail("scheme", "has unknown value '" + s + "'");
}

Method method_from(const std::string& s) {
    if (s == to_string(Method::Jacobi)) return Method::Jacobi;
    if (s == to_string(Method::JacobiNewton)) return Method::JacobiNewton;
    Fields::fail("solver.method", "has unknown value '" + s + "'");
}

void read_solver(Fields& f, SolverConfig& c) {
    if (f.has("method")) c.method = method_from(f.string("method"));
    if (f.has("tol_residual")) c.tol_residual = f.number("tol_residual");
    if (f.has("max_iters")) c.max_iters = f.int32("max_iters", 0);
    if (f.has("damping")) c.damping = f.number("damping");
    if (f.has("inner_iters")) c.inner_iters = f.int32("inner_iters", 1);
    if (f.has("inner_tol")) c.inner_tol = f.number("inner_tol");
    if (f.has("newton_substeps")) c.newton_substeps = f.int32("newton_substeps", 1);
    if (f.has("time_grid_update_period"))
        c.time_grid_update_period = f.int32("time_grid_update_period", 1);
    if (f.has("adaptive_sundman")) {
        const json& v = f.raw("adaptive_sundman");
        if (v.is_null())
            c.adaptive_sundman.reset();
        else
            c.adaptive_sundman = f.string("adaptive_sundman");
    }
    if (f.has("diagnostics_every")) c.diagnostics_every = f.int32("diagnostics_every", 0);
    if (f.has("damping_post_refine")) c.damping_post_refine = f.number("damping_post_refine");
    if (f.has("post_refine_iters")) c.post_refine_iters = f.int32("post_refine_iters", 0);
    if (f.has("refinement")) {
        const json& arr = f.raw("refinement");
        if (!arr.is_array()) Fields::fail(f.name("refinement"), "must be an array");
        c.refinement.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            Fields st(arr[i], f.name("refinement") + "[" + std::to_string(i) + "]");
            RefinementStage s;
            s.target_N = st.int32("target_N", 3);
            if (st.has("trigger_iters")) s.trigger_iters = st.int32("trigger_iters", 0);
            st.finish();
            c.refinement.push_back(s);
        }
    }
    f.finish();
}

std::string line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

ParsedConfig parse_run_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed config at " + line_column(text, e.byte) + ": " + e.what());
    }

    ParsedConfig out;
    RunConfig& rc = out.run;
    Fields f(doc, "");
    rc.problem = f.string("problem");
    ProblemOptions& o = rc.options;
    if (f.has("N")) o.N = f.int32("N", 2);
    if (f.has("T")) {
        o.T = f.number("T");
        if (!(*o.T > 0.0)) Fields::fail("T", "must be positive");
    }
    if (f.has("scheme")) o.scheme = scheme_from(f.string("scheme"));
    if (f.has("alpha")) {
        o.alpha = f.number("alpha");
        if (*o.alpha == 0.0) Fields::fail("alpha", "must be nonzero");
    }
    if (f.has("alpha_gauss")) o.alpha_gauss = f.number("alpha_gauss");
    if (f.has("params")) {
        Fields p(f.raw("params"), "params");
        for (const std::string& name : problem_parameters(rc.problem))
            if (p.has(name)) o.params[name] = p.number(name);
        p.finish();
    }
    if (f.has("boundary")) {
        Fields b(f.raw("boundary"), "boundary");
        if (b.has("left")) o.left = vector_of(b.raw("left"), "boundary.left");
        if (b.has("right")) o.right = vector_of(b.raw("right"), "boundary.right");
        if (b.has("knots")) {
            const json& arr = b.raw("knots");
            if (!arr.is_array()) Fields::fail("boundary.knots", "must be an array");
            std::vector<Knot> knots;
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const std::string nm = "boundary.knots[" + std::to_string(i) + "]";
                Fields k(arr[i], nm);
                Knot kn;
                kn.index = k.int32("index", 1);
                kn.position = vector_of(k.raw("position"), nm + ".position");
                if (k.has("full_node")) kn.full_node = k.boolean("full_node");
                k.finish();
                knots.push_back(std::move(kn));
            }
            o.knots = std::move(knots);
        }
        b.finish();
    }
    if (f.has("initial_guess")) {
        Fields g(f.raw("initial_guess"), "initial_guess");
        if (g.has("waypoints")) {
            const json& arr = g.raw("waypoints");
            if (!arr.is_array()) Fields::fail("initial_guess.waypoints", "must be an array");
            std::vector<Eigen::VectorXd> w;
            for (std::size_t i = 0; i < arr.size(); ++i)
                w.push_back(vector_of(arr[i], "initial_guess.waypoints[" + std::to_string(i) + "]"));
            o.waypoints = std::move(w);
        }
        if (g.has("noise")) {
            rc.guess_noise = g.number("noise");
            if (rc.guess_noise < 0.0) Fields::fail("initial_guess.noise", "must be non-negative");
        }
        g.finish();
    }
    if (f.has("seed")) {
        const long long s = f.integer("seed");
        if (s < 0) Fields::fail("seed", "must be non-negative");
        rc.seed = static_cast<std::uint64_t>(s);
    }
    if (f.has("output_dir")) rc.output_dir = f.string("output_dir");
    if (f.has("serial")) rc.serial = f.boolean("serial");

    std::optional<json> solver;
    if (f.has("solver")) solver = f.raw("solver");
    f.finish();

    try {
        out.problem = make_problem(rc.problem, o);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    if (solver) {
        Fields s(*solver, "solver");
        read_solver(s, out.problem.config);
    }
    try {
        out.problem.config.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("solver: ") + e.what());
    }
    for (const RefinementStage& st : out.problem.config.refinement)
        if (st.target_N <= out.problem.N)
            Fields::fail("solver.refinement", "targets must exceed N = " + std::to_string(out.problem.N));
    if (out.problem.config.adaptive_sundman &&
        !out.problem.monitors.count(*out.problem.config.adaptive_sundman))
        Fields::fail("solver.adaptive_sundman",
                     "names no monitor of problem '" + rc.problem + "'");
    return out;
}

ParsedConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

Trajectory initial_guess(const ParsedConfig& cfg) {
    Trajectory t = cfg.problem.initial_guess();
    if (cfg.run.guess_noise > 0.0) {
        const NodeConstraints c(cfg.problem.boundary, t.intervals(), t.gamma(), t.dim());
        std::mt19937_64 rng(cfg.run.seed);
        std::uniform_real_distribution<double> dist(-cfg.run.guess_noise, cfg.run.guess_noise);
        for (int k = 1; k < t.intervals(); ++k)
            for (int i : c.free_components(k)) t.node(k)(i) += dist(rng);
    }
    return t;
}

namespace {

void put(std::ostream& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    out.write(buf, res.ptr - buf);
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    const int m = traj.node_size();
    out << "k,t";
    for (int i = 0; i < m; ++i) {
        const int deg = i / traj.dim();
        out << ",q" << deg << "_" << (i % traj.dim());
    }
    out << '\n';
    for (int k = 0; k <= traj.intervals(); ++k) {
        out << k << ',';
        put(out, traj.times()[static_cast<std::size_t>(k)]);
        for (int i = 0; i < m; ++i) {
            out << ',';
            put(out, traj.node(k)(i));
        }
        out << '\n';
    }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    write_trajectory_csv(out, traj);
}

Trajectory read_trajectory_csv(std::istream& in, int gamma, int dim) {
    const int m = gamma * dim;
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("empty trajectory file");
    std::vector<TrajectoryNode> nodes;
    std::vector<double> times;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<double> cells;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t next = line.find(',', pos);
            if (next == std::string::npos) next = line.size();
            double v = 0.0;
            const auto res = std::from_chars(line.data() + pos, line.data() + next, v);
            if (res.ec != std::errc() || res.ptr != line.data() + next)
                throw InvalidArgument("bad number in trajectory row " + std::to_string(row));
            cells.push_back(v);
            pos = next + 1;
        }
        if (static_cast<int>(cells.size()) != m + 2)
            throw InvalidArgument("trajectory row " + std::to_string(row) + " has " +
                                  std::to_string(cells.size()) + " columns, expected " +
                                  std::to_string(m + 2));
        if (cells[0] != static_cast<double>(nodes.size()))
            throw InvalidArgument("trajectory rows out of order at row " + std::to_string(row));
        times.push_back(cells[1]);
        TrajectoryNode node(m);
        for (int i = 0; i < m; ++i) node(i) = cells[static_cast<std::size_t>(i) + 2];
        nodes.push_back(node);
    }
    return Trajectory(gamma, dim, std::move(nodes), std::move(times));
}

Trajectory read_trajectory_csv(const std::filesystem::path& path, int gamma, int dim) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot read " + path.string());
    return read_trajectory_csv(in, gamma, dim);
}

void write_residuals_csv(const std::filesystem::path& path, const SolveReport& rep) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << "iteration,residual\n";
    for (std::size_t i = 0; i < rep.residual_history.size(); ++i) {
        out << i << ',';
        put(out, rep.residual_history[i]);
        out << '\n';
    }
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const ConvergenceReport& rep) {
    json steps = json::array();
    for (const StepVerdict& s : rep.steps)
        steps.push_back({{"psd", s.psd},
                         {"min_eigenvalue", number_or_null(s.min_eigenvalue)},
                         {"A_pd", s.a_pd},
                         {"B_pd", s.b_pd}});
    return {{"guarantee", to_string(rep.guarantee)},
            {"all_steps_psd", rep.all_steps_psd},
            {"all_A_pd", rep.all_A_pd},
            {"all_B_pd", rep.all_B_pd},
            {"global_pd", rep.global_pd},
            {"spectral_radius_estimate", number_or_null(rep.spectral_radius_estimate)},
            {"steps", steps}};
}

json to_json(const SolverConfig& c) {
    json ref = json::array();
    for (const RefinementStage& s : c.refinement)
        ref.push_back({{"target_N", s.target_N}, {"trigger_iters", s.trigger_iters}});
    return {{"method", to_string(c.method)},
            {"tol_residual", c.tol_residual},
            {"max_iters", c.max_iters},
            {"damping", c.damping},
            {"inner_iters", c.inner_iters},
            {"inner_tol", c.inner_tol},
            {"newton_substeps", c.newton_substeps},
            {"refinement", ref},
            {"time_grid_update_period", c.time_grid_update_period},
            {"adaptive_sundman", c.adaptive_sundman ? json(*c.adaptive_sundman) : json(nullptr)},
            {"diagnostics_every", c.diagnostics_every},
            {"damping_post_refine", c.damping_post_refine},
            {"post_refine_iters", c.post_refine_iters}};
}

json to_json(const SolveReport& rep) {
    json diags = json::array();
    for (const DiagnosticsSnapshot& d : rep.diagnostics)
        diags.push_back({{"iteration", d.iteration}, {"report", to_json(d.report)}});
    json knots = json::array();
    for (const Knot& k : rep.boundary.knots) {
        knots.push_back({{"index", k.index},
                         {"position", std::vector<double>(k.position.data(),
                                                          k.position.data() + k.position.size())},
                         {"full_node", k.full_node}});
    }
    const double last = rep.residual_history.empty() ? 0.0 : rep.residual_history.back();
    return {{"status", to_string(rep.status)},
            {"converged", rep.converged},
            {"iterations", rep.iterations},
            {"final_residual", number_or_null(last)},
            {"N", rep.final.intervals()},
            {"t_final", rep.final.times().empty() ? json(nullptr) : json(rep.final.times().back())},
            {"refinements", rep.refinements},
            {"time_grid_updates", rep.time_grid_updates},
            {"wall_time_seconds", rep.wall_time},
            {"error", rep.error.empty() ? json(nullptr) : json(rep.error)},
            {"knots", knots},
            {"diagnostics", diags}};
}

}  // namespace varint
