#include "gradix/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "gradix/error.hpp"

namespace gradix {

namespace {

using nlohmann::json;

void allow_keys(const json& j, const char* where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw UsageError(std::string("config: '") + where + "' must be an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& item : j.items()) {
        if (!allowed.count(item.key())) {
            throw UsageError(std::string("config: unknown key '") + item.key() + "' in '" + where + "'");
        }
    }
}

template <class T>
void read(const json& j, const char* key, T& out, const char* where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw UsageError(std::string("config: '") + where + "." + key + "' has the wrong type");
    }
}

template <class T>
void read_opt(const json& j, const char* key, std::optional<T>& out, const char* where) {
    if (!j.contains(key)) return;
    T v{};
    read(j, key, v, where);
    out = v;
}

std::size_t read_count(const json& j, const char* key, const char* where) {
    if (!j.contains(key)) return 0;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw UsageError(std::string("config: '") + where + "." + key + "' must be a nonnegative integer");
    }
    return v.get<std::size_t>();
}

Interval read_interval(const json& j, const char* where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw UsageError(std::string("config: '") + where + "' must be [lo, hi]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

IndexProfile parse_profile(const std::string& s) {
    if (s == "uniform") return IndexProfile::uniform;
    if (s == "linear") return IndexProfile::linear;
    if (s == "radial") return IndexProfile::radial;
    throw UsageError("config: unknown refractive-index profile '" + s + "' (uniform, linear, radial)");
}

const char* profile_name(IndexProfile p) {
    switch (p) {
        case IndexProfile::uniform: return "uniform";
        case IndexProfile::linear: return "linear";
        case IndexProfile::radial: return "radial";
    }
    return "uniform";
}

}  // namespace

RunConfig parse_run_config(const json& j) {
    allow_keys(j, "config",
               {"description", "case", "physics", "counts", "architecture", "loss", "optimizer", "ensemble", "bound",
                "seed", "out"});
    RunConfig c;
    if (!j.contains("case") || !j["case"].is_string()) throw UsageError("config: 'case' (string) is required");
    c.case_name = j["case"].get<std::string>();
    if (std::find(case_names().begin(), case_names().end(), c.case_name) == case_names().end()) {
        make_case(c.case_name);  // throws with the list of known cases
    }

    if (j.contains("physics")) {
        const auto& p = j["physics"];
        allow_keys(p, "physics", {"ke", "alpha", "c", "L", "mu", "eta", "data_region", "profile"});
        read_opt(p, "ke", c.physics.ke, "physics");
        read_opt(p, "alpha", c.physics.alpha, "physics");
        read_opt(p, "c", c.physics.c, "physics");
        read_opt(p, "L", c.physics.L, "physics");
        read_opt(p, "mu", c.physics.mu, "physics");
        read_opt(p, "eta", c.physics.eta, "physics");
        if (p.contains("data_region")) {
            const auto& d = p["data_region"];
            allow_keys(d, "physics.data_region", {"x", "y"});
            if (!d.contains("x") || !d.contains("y")) throw UsageError("config: data_region needs 'x' and 'y'");
            c.physics.data_region = Box{read_interval(d["x"], "data_region.x"), read_interval(d["y"], "data_region.y")};
        }
        if (p.contains("profile")) {
            std::string s;
            read(p, "profile", s, "physics");
            c.profile = parse_profile(s);
        }
    }

    if (!j.contains("counts")) throw UsageError("config: 'counts' is required");
    const auto& n = j["counts"];
    allow_keys(n, "counts", {"N_int", "N_sb", "N_tb", "N_d"});
    c.counts = {read_count(n, "N_int", "counts"), read_count(n, "N_sb", "counts"), read_count(n, "N_tb", "counts"),
                read_count(n, "N_d", "counts")};

    if (j.contains("architecture")) {
        const auto& a = j["architecture"];
        allow_keys(a, "architecture", {"hidden_layers", "width"});
        c.hidden_layers = read_count(a, "hidden_layers", "architecture");
        c.width = read_count(a, "width", "architecture");
    }
    if (c.hidden_layers < 1 || c.width < 1) throw UsageError("config: architecture needs positive layers and width");

    if (j.contains("loss")) {
        const auto& l = j["loss"];
        allow_keys(l, "loss", {"lambda", "lambda_reg", "reg_order"});
        read(l, "lambda", c.loss.lambda, "loss");
        read(l, "lambda_reg", c.loss.lambda_reg, "loss");
        read(l, "reg_order", c.loss.reg_order, "loss");
    }
    c.loss.validate();

    if (j.contains("optimizer")) {
        const auto& o = j["optimizer"];
        allow_keys(o, "optimizer", {"adam", "lbfgs"});
        if (o.contains("adam")) {
            const auto& a = o["adam"];
            allow_keys(a, "optimizer.adam", {"step", "beta1", "beta2", "epsilon", "max_iters", "grad_tol"});
            read(a, "step", c.optimizer.adam.step, "optimizer.adam");
            read(a, "beta1", c.optimizer.adam.beta1, "optimizer.adam");
            read(a, "beta2", c.optimizer.adam.beta2, "optimizer.adam");
            read(a, "epsilon", c.optimizer.adam.epsilon, "optimizer.adam");
            if (a.contains("max_iters")) c.optimizer.adam.max_iters = read_count(a, "max_iters", "optimizer.adam");
            read(a, "grad_tol", c.optimizer.adam.grad_tol, "optimizer.adam");
        }
        if (o.contains("lbfgs")) {
            const auto& b = o["lbfgs"];
            allow_keys(b, "optimizer.lbfgs",
                       {"memory", "max_iters", "grad_tol", "c1", "c2", "curvature_floor", "stall_window", "stall_tol",
                        "max_line_search"});
            if (b.contains("memory")) c.optimizer.lbfgs.memory = read_count(b, "memory", "optimizer.lbfgs");
            if (b.contains("max_iters")) c.optimizer.lbfgs.max_iters = read_count(b, "max_iters", "optimizer.lbfgs");
            read(b, "grad_tol", c.optimizer.lbfgs.grad_tol, "optimizer.lbfgs");
            read(b, "c1", c.optimizer.lbfgs.c1, "optimizer.lbfgs");
            read(b, "c2", c.optimizer.lbfgs.c2, "optimizer.lbfgs");
            read(b, "curvature_floor", c.optimizer.lbfgs.curvature_floor, "optimizer.lbfgs");
            if (b.contains("stall_window")) {
                c.optimizer.lbfgs.stall_window = read_count(b, "stall_window", "optimizer.lbfgs");
            }
            read(b, "stall_tol", c.optimizer.lbfgs.stall_tol, "optimizer.lbfgs");
            if (b.contains("max_line_search")) {
                c.optimizer.lbfgs.max_line_search = read_count(b, "max_line_search", "optimizer.lbfgs");
            }
        }
    }
    c.optimizer.validate();

    if (j.contains("ensemble")) {
        const auto& e = j["ensemble"];
        allow_keys(e, "ensemble", {"hidden_layers", "widths", "lambdas", "retrains", "threads"});
        EnsembleConfig g;
        read(e, "hidden_layers", g.hidden_layers, "ensemble");
        read(e, "widths", g.widths, "ensemble");
        read(e, "lambdas", g.lambdas, "ensemble");
        if (e.contains("retrains")) g.retrains = read_count(e, "retrains", "ensemble");
        if (e.contains("threads")) g.threads = read_count(e, "threads", "ensemble");
        g.validate();
        for (double l : g.lambdas) {
            if (!(l > 0.0)) throw UsageError("config: ensemble lambdas must be positive");
        }
        c.ensemble = g;
    }

    if (j.contains("bound")) {
        const auto& b = j["bound"];
        allow_keys(b, "bound",
                   {"T", "nu", "c", "ks_inf", "sigma_g_inf", "V2", "N_S", "a", "l", "C_eps", "hk_sb", "hk_int",
                    "V_bar"});
        BoundInputs in;
        read(b, "T", in.T, "bound");
        read(b, "nu", in.nu, "bound");
        read(b, "c", in.c, "bound");
        read(b, "ks_inf", in.ks_inf, "bound");
        read(b, "sigma_g_inf", in.sigma_g_inf, "bound");
        read(b, "V2", in.V2, "bound");
        if (b.contains("N_S")) in.N_S = read_count(b, "N_S", "bound");
        read(b, "a", in.a, "bound");
        read(b, "l", in.l, "bound");
        read(b, "C_eps", in.C_eps, "bound");
        read(b, "hk_sb", in.hk_sb, "bound");
        read(b, "hk_int", in.hk_int, "bound");
        read(b, "V_bar", in.V_bar, "bound");
        c.bound = in;
    }

    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw UsageError("config: 'seed' must be a nonnegative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    read(j, "out", c.out, "config");
    if (c.out.empty()) c.out = "out/" + c.case_name;

    const CaseSpec spec = build_case(c);
    check_counts(spec, c.counts);
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("config: cannot read '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError("config: '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_run_config(j);
}

json to_json(const RunConfig& c) {
    json j;
    j["case"] = c.case_name;
    json p = json::object();
    if (c.physics.ke) p["ke"] = *c.physics.ke;
    if (c.physics.alpha) p["alpha"] = *c.physics.alpha;
    if (c.physics.c) p["c"] = *c.physics.c;
    if (c.physics.L) p["L"] = *c.physics.L;
    if (c.physics.mu) p["mu"] = *c.physics.mu;
    if (c.physics.eta) p["eta"] = *c.physics.eta;
    if (c.physics.data_region) {
        const Box& b = *c.physics.data_region;
        p["data_region"] = {{"x", {b.x.lo, b.x.hi}}, {"y", {b.y.lo, b.y.hi}}};
    }
    if (c.profile) p["profile"] = profile_name(*c.profile);
    j["physics"] = p;
    j["counts"] = {{"N_int", c.counts.interior},
                   {"N_sb", c.counts.spatial_boundary},
                   {"N_tb", c.counts.temporal_boundary},
                   {"N_d", c.counts.data}};
    j["architecture"] = {{"hidden_layers", c.hidden_layers}, {"width", c.width}};
    j["loss"] = {{"lambda", c.loss.lambda}, {"lambda_reg", c.loss.lambda_reg}, {"reg_order", c.loss.reg_order}};
    const auto& a = c.optimizer.adam;
    const auto& b = c.optimizer.lbfgs;
    j["optimizer"] = {{"adam",
                       {{"step", a.step},
                        {"beta1", a.beta1},
                        {"beta2", a.beta2},
                        {"epsilon", a.epsilon},
                        {"max_iters", a.max_iters},
                        {"grad_tol", a.grad_tol}}},
                      {"lbfgs",
                       {{"memory", b.memory},
                        {"max_iters", b.max_iters},
                        {"grad_tol", b.grad_tol},
                        {"c1", b.c1},
                        {"c2", b.c2},
                        {"curvature_floor", b.curvature_floor},
                        {"stall_window", b.stall_window},
                        {"stall_tol", b.stall_tol},
                        {"max_line_search", b.max_line_search}}}};
    if (c.ensemble) {
        const auto& e = *c.ensemble;
        j["ensemble"] = {{"hidden_layers", e.hidden_layers},
                         {"widths", e.widths},
                         {"lambdas", e.lambdas},
                         {"retrains", e.retrains},
                         {"threads", e.threads}};
    }
    if (c.bound) {
        const auto& in = *c.bound;
        j["bound"] = {{"T", in.T},         {"nu", in.nu},       {"c", in.c},
                      {"ks_inf", in.ks_inf}, {"sigma_g_inf", in.sigma_g_inf}, {"V2", in.V2},
                      {"N_S", in.N_S},     {"a", in.a},         {"l", in.l},
                      {"C_eps", in.C_eps}, {"hk_sb", in.hk_sb}, {"hk_int", in.hk_int},
                      {"V_bar", in.V_bar}};
    }
    j["seed"] = c.seed;
    j["out"] = c.out;
    return j;
}

void apply_desk(RunConfig& c) {
    auto cap = [](std::size_t& n, std::size_t limit) { n = std::min(n, limit); };
    cap(c.counts.interior, kDeskInterior);
    cap(c.counts.spatial_boundary, kDeskBoundary);
    cap(c.counts.temporal_boundary, kDeskBoundary);
    cap(c.counts.data, kDeskBoundary);
    c.optimizer.adam.max_iters /= 2;
    c.optimizer.lbfgs.max_iters /= 2;
}

CaseSpec build_case(const RunConfig& c) {
    if (c.profile) {
        if (c.case_name.rfind("manufactured-graded", 0) != 0) {
            throw UsageError("config: 'profile' applies to manufactured cases only");
        }
        return manufactured_graded_case(*c.profile);
    }
    return make_case(c.case_name, c.physics);
}

Architecture build_architecture(const RunConfig& c, const CaseSpec& spec) {
    return Architecture::uniform(spec.input_dim(), c.hidden_layers, c.width);
}

void check_counts(const CaseSpec& spec, const PointCounts& n) {
    auto fail = [&](const std::string& msg) { throw UsageError("config: case '" + spec.name + "' " + msg); };
    if (n.interior == 0) fail("needs N_int > 0");
    if (spec.use_boundary && n.spatial_boundary == 0) fail("needs N_sb > 0");
    if (!spec.use_boundary && n.spatial_boundary > 0) fail("has no boundary family; set N_sb to 0");
    if (spec.steady && n.temporal_boundary > 0) fail("is steady; set N_tb to 0");
    if (!spec.steady && n.temporal_boundary == 0) fail("is transient and needs N_tb > 0");
    if (spec.inverse && n.data == 0) fail("is an inverse problem and needs N_d > 0");
    if (!spec.inverse && n.data > 0) fail("is a forward problem; set N_d to 0");
}

}  // namespace gradix
