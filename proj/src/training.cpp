#include "gradix/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <thread>

#include "gradix/error.hpp"
#include "gradix/residual_system.hpp"
#include "gradix/rte.hpp"

namespace gradix {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Objective evaluation that maps a non-finite loss to +inf so line searches
// can back off instead of failing.
struct Probe {
    const Objective& f;
    std::size_t evaluations = 0;

    double operator()(std::span<const double> x, std::span<double> g) {
        ++evaluations;
        try {
            const double v = f(x, g);
            return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
        } catch (const NonFiniteError&) {
            return std::numeric_limits<double>::infinity();
        }
    }
};

struct LinePoint {
    double alpha = 0.0;
    double f = 0.0;
    double slope = 0.0;
    std::vector<double> x;
    std::vector<double> g;
};

double cubic_minimizer(const LinePoint& a, const LinePoint& b) {
    const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    const double disc = d1 * d1 - a.slope * b.slope;
    if (!(disc >= 0.0) || !std::isfinite(d1)) return 0.5 * (a.alpha + b.alpha);
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    const double denom = b.slope - a.slope + 2.0 * d2;
    if (denom == 0.0) return 0.5 * (a.alpha + b.alpha);
    const double t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / denom;
    const double lo = std::min(a.alpha, b.alpha);
    const double hi = std::max(a.alpha, b.alpha);
    const double margin = 0.1 * (hi - lo);
    if (!std::isfinite(t) || t < lo + margin || t > hi - margin) return 0.5 * (a.alpha + b.alpha);
    return t;
}

class WolfeSearch {
public:
    WolfeSearch(Probe& probe, const LbfgsConfig& cfg, std::span<const double> x, double f0, double slope0,
                std::span<const double> d)
        : probe_(probe), cfg_(cfg), x_(x), d_(d), f0_(f0), slope0_(slope0) {}

    // Strong-Wolfe step; nullopt when none was found. A point satisfying only
    // sufficient decrease is accepted if the budget runs out.
    std::optional<LinePoint> run(double alpha0) {
        LinePoint prev{0.0, f0_, slope0_, {}, {}};
        double alpha = alpha0;
        for (std::size_t i = 0; i < cfg_.max_line_search; ++i) {
            LinePoint cur = at(alpha);
            if (cur.f > f0_ + cfg_.c1 * alpha * slope0_ || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur);
            if (std::abs(cur.slope) <= -cfg_.c2 * slope0_) return cur;
            if (cur.slope >= 0.0) return zoom(cur, prev);
            prev = std::move(cur);
            alpha *= 2.0;
        }
        return prev.alpha > 0.0 ? std::optional<LinePoint>(prev) : std::nullopt;
    }

private:
    LinePoint at(double alpha) {
        LinePoint p;
        p.alpha = alpha;
        p.x.resize(x_.size());
        p.g.resize(x_.size());
        for (std::size_t i = 0; i < x_.size(); ++i) p.x[i] = x_[i] + alpha * d_[i];
        p.f = probe_(p.x, p.g);
        p.slope = std::isfinite(p.f) ? dot(p.g, d_) : std::numeric_limits<double>::infinity();
        return p;
    }

    std::optional<LinePoint> zoom(LinePoint lo, LinePoint hi) {
        for (std::size_t i = 0; i < cfg_.max_line_search; ++i) {
            const double alpha = std::isfinite(hi.f) ? cubic_minimizer(lo, hi) : 0.5 * (lo.alpha + hi.alpha);
            if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
            LinePoint cur = at(alpha);
            if (cur.f > f0_ + cfg_.c1 * alpha * slope0_ || cur.f >= lo.f) {
                hi = std::move(cur);
            } else {
                if (std::abs(cur.slope) <= -cfg_.c2 * slope0_) return cur;
                if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = std::move(cur);
            }
        }
        return lo.alpha > 0.0 ? std::optional<LinePoint>(lo) : std::nullopt;
    }

    Probe& probe_;
    const LbfgsConfig& cfg_;
    std::span<const double> x_;
    std::span<const double> d_;
    double f0_;
    double slope0_;
};

struct CurvaturePair {
    std::vector<double> s;
    std::vector<double> y;
    double rho;
};

std::vector<double> two_loop(const std::deque<CurvaturePair>& mem, std::span<const double> g) {
    std::vector<double> q(g.begin(), g.end());
    std::vector<double> alpha(mem.size());
    for (std::size_t i = mem.size(); i-- > 0;) {
        alpha[i] = mem[i].rho * dot(mem[i].s, q);
        for (std::size_t k = 0; k < q.size(); ++k) q[k] -= alpha[i] * mem[i].y[k];
    }
    if (!mem.empty()) {
        const auto& last = mem.back();
        const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
        for (auto& v : q) v *= gamma;
    }
    for (std::size_t i = 0; i < mem.size(); ++i) {
        const double beta = mem[i].rho * dot(mem[i].y, q);
        for (std::size_t k = 0; k < q.size(); ++k) q[k] += (alpha[i] - beta) * mem[i].s[k];
    }
    for (auto& v : q) v = -v;
    return q;
}

void add_regularization(std::span<const double> x, std::span<double> g, double& f, const LossConfig& cfg) {
    if (cfg.lambda_reg == 0.0) return;
    double reg = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (cfg.reg_order == 1) {
            reg += std::abs(x[i]);
            g[i] += cfg.lambda_reg * (x[i] > 0 ? 1.0 : (x[i] < 0 ? -1.0 : 0.0));
        } else {
            reg += x[i] * x[i];
            g[i] += 2.0 * cfg.lambda_reg * x[i];
        }
    }
    f += cfg.lambda_reg * reg;
}

std::array<double, 4> multipliers_for(const CaseSpec& spec, const LossConfig& cfg) {
    const double sb = spec.use_boundary ? 1.0 : 0.0;
    return {cfg.lambda, sb, 1.0, 1.0};
}

std::string describe(const CaseSpec& spec, const Point& p) {
    std::string s = "(";
    for (std::size_t i = 0; i < spec.coords.size(); ++i) {
        s += (i ? ", " : "") + std::string(coord_name(spec.coords[i])) + "=" + std::to_string(coord_of(p, spec.coords[i]));
    }
    return s + ")";
}

ad::Var checked(const ad::Var& r, const char* family, const CaseSpec& spec, const Point& p) {
    if (!std::isfinite(r.value())) {
        throw NonFiniteError(std::string("non-finite ") + family + " residual at " + describe(spec, p));
    }
    return r;
}

// Accumulates sum w R^2 on the tape.
class TapeSum {
public:
    void add(const ad::Var& r, double w) {
        const ad::Var term = (r * r) * w;
        acc_ = acc_.valid() ? acc_ + term : term;
    }
    ad::Var result(ad::Tape& tape) const { return acc_.valid() ? acc_ : tape.lift(0.0); }

private:
    ad::Var acc_;
};

ad::Var regularization(ad::Tape& tape, const BasicMlp<ad::Var>& net, const LossConfig& cfg) {
    if (cfg.lambda_reg == 0.0) return tape.lift(0.0);
    ad::Var acc;
    for (const auto& v : flatten(net)) {
        const ad::Var term = cfg.reg_order == 1 ? (v.value() >= 0 ? v : -v) : v * v;
        acc = acc.valid() ? acc + term : term;
    }
    return acc * cfg.lambda_reg;
}

ad::Var tape_loss(ad::Tape& tape, const BasicMlp<ad::Var>& net, const TrainingSet& sets, const CaseSpec& spec,
                  const LossConfig& cfg, bool with_data, bool with_boundary) {
    TapeSum interior, boundary, temporal, data;
    for (std::size_t i = 0; i < sets.interior.size(); ++i) {
        const Point& p = sets.interior.points[i];
        interior.add(checked(interior_residual(tape, net, spec, p), "interior", spec, p), sets.interior.weights[i]);
    }
    if (with_boundary) {
        for (std::size_t i = 0; i < sets.spatial_boundary.size(); ++i) {
            const Point& p = sets.spatial_boundary.points[i];
            boundary.add(checked(boundary_residual(tape, net, spec, p), "spatial_boundary", spec, p),
                         sets.spatial_boundary.weights[i]);
        }
    }
    for (std::size_t i = 0; i < sets.temporal_boundary.size(); ++i) {
        const Point& p = sets.temporal_boundary.points[i];
        temporal.add(checked(temporal_residual(tape, net, spec, p), "temporal_boundary", spec, p),
                     sets.temporal_boundary.weights[i]);
    }
    if (with_data) {
        for (std::size_t i = 0; i < sets.data.size(); ++i) {
            const Point& p = sets.data.points[i];
            data.add(checked(data_residual(tape, net, spec, p, sets.data_values[i]), "data", spec, p),
                     sets.data.weights[i]);
        }
    }
    ad::Var total = boundary.result(tape) + temporal.result(tape) + interior.result(tape) * cfg.lambda;
    if (with_data) total = data.result(tape) + total;
    return total + regularization(tape, net, cfg);
}

double callable_loss(const ScalarField& field, const TrainingSet& sets, const CaseSpec& spec, const LossConfig& cfg,
                     bool with_data, bool with_boundary) {
    double interior = 0.0, boundary = 0.0, temporal = 0.0, data = 0.0;
    for (std::size_t i = 0; i < sets.interior.size(); ++i) {
        const double r = interior_residual(spec, field, sets.interior.points[i]);
        interior += sets.interior.weights[i] * r * r;
    }
    if (with_boundary) {
        for (std::size_t i = 0; i < sets.spatial_boundary.size(); ++i) {
            const double r = boundary_residual(spec, field, sets.spatial_boundary.points[i]);
            boundary += sets.spatial_boundary.weights[i] * r * r;
        }
    }
    for (std::size_t i = 0; i < sets.temporal_boundary.size(); ++i) {
        const Point& p = sets.temporal_boundary.points[i];
        const double r = field(p) - spec.initial(p);
        temporal += sets.temporal_boundary.weights[i] * r * r;
    }
    if (with_data) {
        for (std::size_t i = 0; i < sets.data.size(); ++i) {
            const double r = data_residual(spec, field, sets.data.points[i], sets.data_values[i]);
            data += sets.data.weights[i] * r * r;
        }
    }
    return data + boundary + temporal + cfg.lambda * interior;
}

void check_forward(const TrainingSet& sets, const CaseSpec& spec) {
    if (spec.inverse) throw UsageError("forward loss requested on inverse case '" + spec.name + "'");
    if (sets.interior.empty()) throw UsageError("forward loss needs interior points");
    if (sets.spatial_boundary.empty()) throw UsageError("forward loss needs spatial-boundary points");
    if (!spec.steady && sets.temporal_boundary.empty()) throw UsageError("transient forward loss needs temporal points");
}

void check_inverse(const TrainingSet& sets, const CaseSpec& spec) {
    if (!spec.data_region) throw UsageError("inverse loss requested on case '" + spec.name + "' without D'");
    if (sets.data.empty()) throw UsageError("inverse loss needs a non-empty data family");
    if (sets.interior.empty()) throw UsageError("inverse loss needs interior points");
}

std::vector<double> downsample(const std::vector<double>& v, std::size_t every) {
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); i += every) out.push_back(v[i]);
    if (!v.empty() && (v.size() - 1) % every != 0) out.push_back(v.back());
    return out;
}

}  // namespace

void LossConfig::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw UsageError("loss: lambda must be positive");
    if (!(lambda_reg >= 0.0 && lambda_reg < 0.1)) throw UsageError("loss: lambda_reg must lie in [0, 0.1)");
    if (reg_order != 1 && reg_order != 2) throw UsageError("loss: regularization order must be 1 or 2");
}

void OptimizerConfig::validate() const {
    if (!(adam.beta1 > 0 && adam.beta1 < 1 && adam.beta2 > 0 && adam.beta2 < 1)) {
        throw UsageError("adam: betas must lie in (0, 1)");
    }
    if (!(adam.step > 0) || !(adam.epsilon > 0)) throw UsageError("adam: step and epsilon must be positive");
    if (lbfgs.memory < 1) throw UsageError("lbfgs: memory must be at least 1");
    if (!(lbfgs.grad_tol > 0) || !(lbfgs.stall_tol > 0)) throw UsageError("lbfgs: tolerances must be positive");
    if (!(lbfgs.c1 > 0 && lbfgs.c1 < lbfgs.c2 && lbfgs.c2 < 1)) throw UsageError("lbfgs: need 0 < c1 < c2 < 1");
}

OptimizeResult adam_minimize(const Objective& f, std::vector<double> x, const AdamConfig& cfg) {
    OptimizeResult res;
    const std::size_t n = x.size();
    std::vector<double> g(n), m(n, 0.0), v(n, 0.0);
    res.params = x;
    res.loss = std::numeric_limits<double>::infinity();
    res.stop_reason = "max_iterations";
    double b1t = 1.0, b2t = 1.0;
    for (std::size_t it = 0;; ++it) {
        const double fx = f(x, g);
        ++res.evaluations;
        if (!std::isfinite(fx)) {
            throw TrainingAbort("adam: non-finite loss at iteration " + std::to_string(it) +
                                " (best loss so far " + std::to_string(res.loss) + ")");
        }
        if (fx < res.loss) {
            res.loss = fx;
            res.params = x;
        }
        if (norm(g) <= cfg.grad_tol) {
            res.stop_reason = "gradient_tolerance";
            break;
        }
        if (it == cfg.max_iters) break;
        res.history.push_back(fx);
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mh = m[i] / (1.0 - b1t);
            const double vh = v[i] / (1.0 - b2t);
            x[i] -= cfg.step * mh / (std::sqrt(vh) + cfg.epsilon);
        }
        res.iterations = it + 1;
    }
    return res;
}

OptimizeResult lbfgs_minimize(const Objective& f, std::vector<double> x, const LbfgsConfig& cfg) {
    OptimizeResult res;
    Probe probe{f};
    std::vector<double> g(x.size());
    double fx = probe(x, g);
    if (!std::isfinite(fx)) throw TrainingAbort("lbfgs: non-finite loss at the starting point");
    std::deque<CurvaturePair> mem;
    res.stop_reason = "max_iterations";
    if (norm(g) <= cfg.grad_tol) {
        res.stop_reason = "gradient_tolerance";
    } else {
        bool fallback_used = false;
        for (std::size_t it = 0; it < cfg.max_iters; ++it) {
            std::vector<double> d = mem.empty() ? std::vector<double>() : two_loop(mem, g);
            double slope = d.empty() ? 0.0 : dot(g, d);
            if (d.empty() || !(slope < 0.0)) {
                d.assign(g.size(), 0.0);
                for (std::size_t i = 0; i < g.size(); ++i) d[i] = -g[i];
                slope = dot(g, d);
                mem.clear();
            }
            const double alpha0 = mem.empty() ? std::min(1.0, 1.0 / norm(g)) : 1.0;
            auto step = WolfeSearch(probe, cfg, x, fx, slope, d).run(alpha0);
            if (!step) {
                if (fallback_used || mem.empty()) {
                    res.stop_reason = "line_search_failed";
                    break;
                }
                // Retry once from steepest descent with a fresh memory.
                fallback_used = true;
                mem.clear();
                --it;
                continue;
            }
            fallback_used = false;
            CurvaturePair pair;
            pair.s.resize(x.size());
            pair.y.resize(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                pair.s[i] = step->x[i] - x[i];
                pair.y[i] = step->g[i] - g[i];
            }
            const double sy = dot(pair.s, pair.y);
            if (sy > cfg.curvature_floor) {
                pair.rho = 1.0 / sy;
                mem.push_back(std::move(pair));
                if (mem.size() > cfg.memory) mem.pop_front();
            }
            x = std::move(step->x);
            g = std::move(step->g);
            fx = step->f;
            res.history.push_back(fx);
            res.iterations = it + 1;
            if (norm(g) <= cfg.grad_tol) {
                res.stop_reason = "gradient_tolerance";
                break;
            }
            const std::size_t k = res.history.size();
            if (k > cfg.stall_window && res.history[k - 1 - cfg.stall_window] - fx < cfg.stall_tol) {
                res.stop_reason = "stalled";
                break;
            }
        }
    }
    res.params = std::move(x);
    res.loss = fx;
    res.evaluations = probe.evaluations;
    return res;
}

ad::Var loss_forward(ad::Tape& tape, const BasicMlp<ad::Var>& net, const TrainingSet& sets, const CaseSpec& spec,
                     const LossConfig& cfg) {
    cfg.validate();
    check_forward(sets, spec);
    return tape_loss(tape, net, sets, spec, cfg, false, true);
}

ad::Var loss_inverse(ad::Tape& tape, const BasicMlp<ad::Var>& net, const TrainingSet& sets, const CaseSpec& spec,
                     const LossConfig& cfg) {
    cfg.validate();
    check_inverse(sets, spec);
    return tape_loss(tape, net, sets, spec, cfg, true, true);
}

double loss_forward(const ScalarField& field, const TrainingSet& sets, const CaseSpec& spec, const LossConfig& cfg) {
    cfg.validate();
    check_forward(sets, spec);
    return callable_loss(field, sets, spec, cfg, false, true);
}

double loss_inverse(const ScalarField& field, const TrainingSet& sets, const CaseSpec& spec, const LossConfig& cfg) {
    cfg.validate();
    check_inverse(sets, spec);
    return callable_loss(field, sets, spec, cfg, true, true);
}

Objective make_objective(const CaseSpec& spec, const TrainingSet& sets, const Architecture& arch,
                         const LossConfig& cfg, Engine engine) {
    cfg.validate();
    if (spec.inverse) {
        check_inverse(sets, spec);
    } else {
        check_forward(sets, spec);
    }
    if (engine == Engine::batched) {
        auto system = std::make_shared<ResidualSystem>(spec, sets, arch, multipliers_for(spec, cfg));
        return [system, cfg](std::span<const double> x, std::span<double> g) {
            auto ev = system->evaluate(x, true);
            std::copy(ev.gradient.begin(), ev.gradient.end(), g.begin());
            add_regularization(x, g, ev.loss, cfg);
            return ev.loss;
        };
    }
    return [spec, sets, arch, cfg](std::span<const double> x, std::span<double> g) {
        ad::Tape tape;
        const auto net = on_tape(tape, unflatten(arch, x));
        const auto leaves = flatten(net);
        const ad::Var loss = spec.inverse ? tape_loss(tape, net, sets, spec, cfg, true, spec.use_boundary)
                                          : tape_loss(tape, net, sets, spec, cfg, false, true);
        const auto grad = ad::reverse_gradient(loss, leaves);
        std::copy(grad.begin(), grad.end(), g.begin());
        return loss.value();
    };
}

FamilyErrors training_errors(const MlpParams& params, const TrainingSet& sets, const CaseSpec& spec) {
    const ResidualSystem system(spec, sets, params.arch, {1.0, 1.0, 1.0, 1.0});
    const auto flat = flatten(params);
    return system.training_errors(system.evaluate(flat, false).residuals);
}

namespace {

TrainResult run_training(const CaseSpec& spec, const PointCounts& counts, const Architecture& arch,
                         const LossConfig& loss, const OptimizerConfig& opt, std::uint64_t seed, Engine engine) {
    const auto start = std::chrono::steady_clock::now();
    loss.validate();
    opt.validate();
    arch.validate();
    const TrainingSet sets = build_training_set(spec, counts, SamplingStrategy::sobol, seed);
    const Objective objective = make_objective(spec, sets, arch, loss, engine);

    TrainResult result;
    result.case_name = spec.name;
    result.seed = seed;
    result.arch = arch;
    result.loss = loss;
    result.optimizer = opt;
    result.counts = counts;

    std::vector<double> x = flatten(init(arch, seed));
    OptimizeResult warm;
    if (opt.adam.max_iters > 0) {
        warm = adam_minimize(objective, x, opt.adam);
        x = warm.params;
        result.loss_history = warm.history;
        result.adam_iterations = warm.iterations;
    }
    OptimizeResult fine = lbfgs_minimize(objective, x, opt.lbfgs);
    result.loss_history.insert(result.loss_history.end(), fine.history.begin(), fine.history.end());
    result.lbfgs_iterations = fine.iterations;
    result.stop_reason = fine.stop_reason;
    result.params = unflatten(arch, fine.params);
    result.final_loss = fine.loss;
    result.training_errors = training_errors(result.params, sets, spec);
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace

TrainResult train_forward(const CaseSpec& spec, const PointCounts& counts, const Architecture& arch,
                          const LossConfig& loss, const OptimizerConfig& opt, std::uint64_t seed, Engine engine) {
    if (spec.inverse) throw UsageError("train_forward: case '" + spec.name + "' is an inverse problem");
    return run_training(spec, counts, arch, loss, opt, seed, engine);
}

TrainResult train_inverse(const CaseSpec& spec, const PointCounts& counts, const Architecture& arch,
                          const LossConfig& loss, const OptimizerConfig& opt, std::uint64_t seed, Engine engine) {
    if (!spec.inverse) throw UsageError("train_inverse: case '" + spec.name + "' is a forward problem");
    return run_training(spec, counts, arch, loss, opt, seed, engine);
}

TrainResult train(const CaseSpec& spec, const PointCounts& counts, const Architecture& arch, const LossConfig& loss,
                  const OptimizerConfig& opt, std::uint64_t seed, Engine engine) {
    return spec.inverse ? train_inverse(spec, counts, arch, loss, opt, seed, engine)
                        : train_forward(spec, counts, arch, loss, opt, seed, engine);
}

void EnsembleConfig::validate() const {
    if (hidden_layers.empty() || widths.empty() || lambdas.empty()) throw UsageError("ensemble: empty grid");
    if (retrains < 1) throw UsageError("ensemble: retrain count must be at least 1");
    for (auto k : hidden_layers) {
        if (k < 1) throw UsageError("ensemble: need at least one hidden layer");
    }
    for (auto w : widths) {
        if (w < 1) throw UsageError("ensemble: widths must be positive");
    }
}

std::size_t default_thread_count() {
    if (const char* env = std::getenv("GRADIX_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

EnsembleResult ensemble_train(const CaseSpec& spec, const PointCounts& counts, const EnsembleConfig& grid,
                              const LossConfig& loss, const OptimizerConfig& opt, std::uint64_t base_seed) {
    grid.validate();
    struct Job {
        LeaderboardEntry entry;
        std::optional<TrainResult> result;
    };
    std::vector<Job> jobs;
    for (auto k : grid.hidden_layers) {
        for (auto w : grid.widths) {
            for (double lam : grid.lambdas) {
                for (std::size_t r = 0; r < grid.retrains; ++r) {
                    Job j;
                    j.entry.hidden_layers = k;
                    j.entry.width = w;
                    j.entry.lambda = lam;
                    j.entry.seed = base_seed + r;
                    jobs.push_back(std::move(j));
                }
            }
        }
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            auto& job = jobs[i];
            try {
                LossConfig lc = loss;
                lc.lambda = job.entry.lambda;
                const auto arch = Architecture::uniform(spec.input_dim(), job.entry.hidden_layers, job.entry.width);
                job.result = train(spec, counts, arch, lc, opt, job.entry.seed);
                job.entry.final_loss = job.result->final_loss;
                job.entry.seconds = job.result->seconds;
            } catch (const std::exception& e) {
                job.entry.failed = true;
                job.entry.final_loss = std::numeric_limits<double>::infinity();
                job.entry.error = e.what();
            }
        }
    };
    const std::size_t threads = std::min(jobs.size(), grid.threads ? grid.threads : default_thread_count());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::vector<std::size_t> order(jobs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ea = jobs[a].entry;
        const auto& eb = jobs[b].entry;
        if (ea.final_loss != eb.final_loss) return ea.final_loss < eb.final_loss;
        return ea.seed < eb.seed;
    });
    if (jobs[order.front()].entry.failed) {
        std::string msg = "ensemble: all " + std::to_string(jobs.size()) + " runs failed";
        for (const auto& j : jobs) {
            msg += "\n  layers=" + std::to_string(j.entry.hidden_layers) + " width=" + std::to_string(j.entry.width) +
                   " lambda=" + std::to_string(j.entry.lambda) + " seed=" + std::to_string(j.entry.seed) + ": " +
                   j.entry.error;
        }
        throw TrainingAbort(msg);
    }
    EnsembleResult out;
    for (auto i : order) out.leaderboard.push_back(jobs[i].entry);
    out.best = std::move(*jobs[order.front()].result);
    return out;
}

nlohmann::json to_json(const TrainResult& r) {
    nlohmann::json j;
    j["case"] = r.case_name;
    j["seed"] = r.seed;
    j["widths"] = r.arch.widths;
    j["layers"] = r.arch.hidden_layers();
    j["width"] = r.arch.widths.size() > 2 ? r.arch.widths[1] : 0;
    j["lambda"] = r.loss.lambda;
    j["lambda_reg"] = r.loss.lambda_reg;
    j["reg_order"] = r.loss.reg_order;
    j["counts"] = {{"N_int", r.counts.interior},
                   {"N_sb", r.counts.spatial_boundary},
                   {"N_tb", r.counts.temporal_boundary},
                   {"N_d", r.counts.data}};
    j["optimizer"] = {{"adam",
                       {{"step", r.optimizer.adam.step},
                        {"beta1", r.optimizer.adam.beta1},
                        {"beta2", r.optimizer.adam.beta2},
                        {"epsilon", r.optimizer.adam.epsilon},
                        {"max_iters", r.optimizer.adam.max_iters}}},
                      {"lbfgs",
                       {{"memory", r.optimizer.lbfgs.memory},
                        {"max_iters", r.optimizer.lbfgs.max_iters},
                        {"grad_tol", r.optimizer.lbfgs.grad_tol},
                        {"c1", r.optimizer.lbfgs.c1},
                        {"c2", r.optimizer.lbfgs.c2}}}};
    j["final_loss"] = r.final_loss;
    j["adam_iterations"] = r.adam_iterations;
    j["lbfgs_iterations"] = r.lbfgs_iterations;
    j["stop_reason"] = r.stop_reason;
    j["E_T"] = {{"int", r.training_errors[0]},
                {"sb", r.training_errors[1]},
                {"tb", r.training_errors[2]},
                {"d", r.training_errors[3]}};
    j["loss_history"] = downsample(r.loss_history, 10);
    j["seconds"] = r.seconds;
    return j;
}

}  // namespace gradix
