// Copyright 2026 The lcsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LCSIM_ESTIMATOR_HPP
#define LCSIM_ESTIMATOR_HPP

#include "lcsim/engine.hpp"

#include <chrono>
#include <limits>
#include <thread>

namespace lcsim {

/// Thrown when no step size or order satisfies the builders' preconditions and the target.
struct PlanInfeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PlanOptions {
    double c_tau = 0.5;
    double c_M = 1.0;
    double lambda = kLambda;
    int max_order = kMaxDissipativeOrder;
    CoarseMode mode = CoarseMode::trotter;
    uint64_t seed = 1;
    int output_every = 1;
    std::optional<double> tau;
    std::optional<int> K;
    std::optional<long long> N;
    std::optional<int> M;
};

struct SimPlan {
    double T = 0;
    double epsilon = 0;
    double delta = 0;
    double tau = 0;
    int steps = 0;
    double last_tau = 0;
    int K = 0;
    int M = 1;
    long long N = 1;
    uint64_t seed = 1;
    CoarseMode mode = CoarseMode::trotter;
    int output_every = 1;
    bool time_dependent = false;
    double lambda = kLambda;
    double mu_total = 1;
    double bias_budget = 0;

    double step_start(int s) const { return s * tau; }
    double step_length(int s) const { return s == steps - 1 ? last_tau : tau; }
};

struct EstimateReport {
    double mean = 0;
    double stderr_ = 0;
    double mu_total = 1;
    double bias_budget = 0;
    long long rounds = 0;
    double wall_time = 0;
};

struct TrajectoryPoint {
    double time;
    double mean;
    double stderr_;
    double mu;
};

struct SimulationResult {
    EstimateReport report;
    std::vector<TrajectoryPoint> trajectory;
};

/// Averaged generator over midpoint slices: H = mean H(t_j); jumps D_l(t_j)/sqrt(M), merged when identical.
inline LindbladSnapshot averaged_snapshot(const LindbladSpec &spec, double t0, double tau, int M) {
    if (!spec.time_dependent()) {
        return spec.at(t0);
    }
    std::vector<LindbladSnapshot> snaps;
    for (double t : slice_times(t0, tau, M)) {
        snaps.push_back(spec.at(t));
    }
    LindbladSnapshot avg{PauliSum(spec.n), {}};
    for (auto &s : snaps) {
        avg.H += s.H.scaled(1.0 / M);
    }
    avg.H.prune();
    size_t m = snaps.front().jumps.size();
    for (size_t l = 0; l < m; l++) {
        bool same = true;
        for (auto &s : snaps) {
            PauliSum diff = s.jumps[l] - snaps.front().jumps[l];
            if (!diff.prune(1e-15).empty()) {
                same = false;
            }
        }
        if (same) {
            avg.jumps.push_back(snaps.front().jumps[l]);
        } else {
            for (auto &s : snaps) {
                avg.jumps.push_back(s.jumps[l].scaled(1.0 / std::sqrt(static_cast<double>(M))));
            }
        }
    }
    return avg;
}

/// @brief Everything needed to run one coarse step plus its compensation terms.
class StepProgram {
   public:
    StepProgram(const LindbladSpec &spec, double t0, double tau, int K, int M, CoarseMode mode,
                const DissipativeCoefficients &coeffs, double lambda = kLambda)
        : t0_(t0), tau_(tau), mode_(mode) {
        LindbladSnapshot snap = averaged_snapshot(spec, t0, tau, M);
        int n = spec.n;
        if (mode == CoarseMode::exact) {
            h_exact_ = ExactUnitaryStep(snap.H, tau);
            F_ = LcsFormula::identity(n);
        } else {
            h_trotter_ = TrotterCircuit(snap.H, tau);
            F_ = build_V1(snap.H, tau, K);
        }
        LcsBound inner = F_.bound();
        for (auto &d : snap.jumps) {
            Dissipator diss;
            diss.channel = DilatedChannel(d, tau, mode);
            diss.J = mode == CoarseMode::exact ? LcsFormula::identity(n + 1) : build_J_tilde(d, tau, K);
            diss.N = build_N(d, tau, K, coeffs, lambda);
            LcsBound b = compose_bounds(diss.N.bound(), diss.J.bound());
            b.cptp_target = true;
            inner = compose_bounds(b, inner);
            dissipators_.push_back(std::move(diss));
        }
        M_ = build_M(snap, tau, K);
        LcsBound step = compose_bounds(M_.bound(), inner);
        step.cptp_target = true;
        if (spec.time_dependent()) {
            W_ = build_W(spec, t0, tau, M, K);
            step = compose_bounds(W_.bound(), step);
            double deriv = spec.derivative_bound.value_or(0.0);
            double ln = spec.pauli_norm(t0, t0 + tau, 17);
            step.bias += tau * tau * deriv / (2.0 * M) * std::exp(ln * tau);
            step.cptp_target = true;
        } else {
            W_ = LcsFormula::identity(n);
        }
        bound_ = step;
    }

    double start() const { return t0_; }
    double length() const { return tau_; }
    double mu() const { return bound_.mu; }
    double bias() const { return bound_.bias; }
    const LcsBound &bound() const { return bound_; }
    const LcsFormula &F() const { return F_; }
    const LcsFormula &M() const { return M_; }
    const LcsFormula &W() const { return W_; }
    size_t num_dissipators() const { return dissipators_.size(); }
    const LcsFormula &J(size_t l) const { return dissipators_[l].J; }
    const LcsFormula &N(size_t l) const { return dissipators_[l].N; }
    const DilatedChannel &channel(size_t l) const { return dissipators_[l].channel; }

    /// Coarse step with sampled compensation terms.
    void run_sampled(Matrix &rho, Rng &rng) const {
        coarse_hamiltonian(rho);
        sampled(F_, rho, rng);
        for (auto &d : dissipators_) {
            if (d.J.is_identity()) {
                d.channel.apply(rho);
            } else {
                auto t = d.J.sample(rng);
                if (t.is_identity()) {
                    d.channel.apply(rho);
                } else {
                    d.channel.apply_with_term(rho, t);
                }
            }
            sampled(d.N, rho, rng);
        }
        sampled(M_, rho, rng);
        sampled(W_, rho, rng);
    }

    /// Coarse step followed by the full truncated compensation maps.
    void run_expected(Matrix &rho) const {
        coarse_hamiltonian(rho);
        F_.apply_expected(rho);
        for (auto &d : dissipators_) {
            if (d.J.is_identity()) {
                d.channel.apply(rho);
            } else {
                d.channel.apply_with_map(rho, [&](Matrix &dil) { d.J.apply_expected(dil); });
            }
            d.N.apply_expected(rho);
        }
        M_.apply_expected(rho);
        W_.apply_expected(rho);
    }

    /// Coarse stage only (plain first-order Trotter with dilated dissipators).
    void run_coarse(Matrix &rho) const {
        coarse_hamiltonian(rho);
        for (auto &d : dissipators_) {
            d.channel.apply(rho);
        }
    }

   private:
    struct Dissipator {
        DilatedChannel channel;
        LcsFormula J;
        LcsFormula N;
    };

    void coarse_hamiltonian(Matrix &rho) const {
        if (mode_ == CoarseMode::exact) {
            h_exact_.apply(rho);
        } else {
            h_trotter_.apply(rho);
        }
    }

    static void sampled(const LcsFormula &f, Matrix &rho, Rng &rng) {
        if (f.is_identity()) {
            return;
        }
        auto t = f.sample(rng);
        if (!t.is_identity()) {
            apply_term(t, rho);
        }
    }

    double t0_;
    double tau_;
    CoarseMode mode_;
    TrotterCircuit h_trotter_;
    ExactUnitaryStep h_exact_;
    LcsFormula F_, M_, W_;
    std::vector<Dissipator> dissipators_;
    LcsBound bound_;
};

/// Builds the per-step programs of a plan (steps sharing a length reuse one program
/// when the generator is time independent).
inline std::vector<std::shared_ptr<const StepProgram>> build_programs(const LindbladSpec &spec, const SimPlan &plan) {
    const double lambda = plan.lambda;
    auto coeffs = build_dissipative_coefficients(std::max(plan.K, 2));
    std::vector<std::shared_ptr<const StepProgram>> out;
    std::shared_ptr<const StepProgram> full, last;
    for (int s = 0; s < plan.steps; s++) {
        double t0 = plan.step_start(s), len = plan.step_length(s);
        if (spec.time_dependent()) {
            out.push_back(std::make_shared<StepProgram>(spec, t0, len, plan.K, plan.M, plan.mode, coeffs, lambda));
            continue;
        }
        bool is_last = s == plan.steps - 1 && len != plan.tau;
        auto &slot = is_last ? last : full;
        if (!slot) {
            slot = std::make_shared<StepProgram>(spec, t0, len, plan.K, plan.M, plan.mode, coeffs, lambda);
        }
        out.push_back(slot);
    }
    return out;
}

/// Largest admissible step under the builders' preconditions (strict bounds get a 0.1% margin).
inline double max_admissible_tau(const LindbladSpec &spec, double T, double lambda) {
    double limit = std::numeric_limits<double>::infinity();
    auto consider = [&](const LindbladSnapshot &s) {
        double hn = norm(s.H, 1);
        if (hn > 0) {
            limit = std::min(limit, 0.999 / (2 * hn));
        }
        for (auto &d : s.jumps) {
            double dn2 = std::pow(norm(d, 1), 2);
            if (dn2 > 0) {
                limit = std::min(limit, 0.999 / (16 * dn2));
                limit = std::min(limit, 1.0 / (2 * lambda * dn2));
            }
        }
    };
    if (spec.time_dependent()) {
        for (int k = 0; k <= 256; k++) {
            consider(spec.at(T * k / 256.0));
        }
    } else {
        consider(spec.at(0));
    }
    return limit;
}

/// Step count, tau, K, M and N for a target error epsilon with failure probability delta.
inline SimPlan plan(const LindbladSpec &spec, double T, double epsilon, double delta, const PlanOptions &opt = {}) {
    if (!(T > 0)) {
        throw std::invalid_argument("plan: T must be positive");
    }
    if (!(epsilon > 0 && epsilon < 1) || !(delta > 0 && delta < 1)) {
        throw std::invalid_argument("plan: epsilon and delta must lie in (0, 1)");
    }
    SimPlan p;
    p.T = T;
    p.epsilon = epsilon;
    p.delta = delta;
    p.mode = opt.mode;
    p.seed = opt.seed;
    p.output_every = std::max(1, opt.output_every);
    p.time_dependent = spec.time_dependent();
    p.lambda = opt.lambda;
    double ln = spec.pauli_norm(0, T);
    double limit = max_admissible_tau(spec, T, opt.lambda);
    if (opt.tau) {
        if (!(*opt.tau > 0) || *opt.tau > limit) {
            throw PlanInfeasible("plan: requested tau violates a step-size precondition (limit " + std::to_string(limit) + ")");
        }
        p.tau = *opt.tau;
    } else {
        p.tau = ln > 0 ? opt.c_tau / (ln * ln * T) : T;
        p.tau = std::min({p.tau, limit, T});
    }
    p.steps = static_cast<int>(std::ceil(T / p.tau - 1e-9));
    p.last_tau = T - (p.steps - 1) * p.tau;
    if (p.time_dependent) {
        if (!spec.derivative_bound) {
            throw std::invalid_argument("plan: time-dependent generator needs a derivative bound");
        }
        if (opt.M) {
            p.M = *opt.M;
        } else {
            p.M = std::max(1, static_cast<int>(std::ceil(opt.c_M * *spec.derivative_bound / (epsilon * ln * ln))));
        }
    }
    auto evaluate = [&](int K) {
        p.K = K;
        auto programs = build_programs(spec, p);
        double mu = 1, grow = 1;
        for (auto &prog : programs) {
            mu *= prog->mu();
            grow *= 1 + prog->bias();
        }
        p.mu_total = mu;
        p.bias_budget = grow - 1;
    };
    if (opt.K) {
        evaluate(*opt.K);
    } else {
        bool ok = false;
        for (int K = 0; K <= opt.max_order; K++) {
            evaluate(K);
            if (p.bias_budget <= epsilon / 2) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw PlanInfeasible("plan: no order up to " + std::to_string(opt.max_order) + " meets the bias budget");
        }
    }
    if (opt.N) {
        p.N = std::max<long long>(1, *opt.N);
    } else {
        double n = 8 * p.mu_total * p.mu_total * std::log(2 / delta) / (epsilon * epsilon);
        p.N = static_cast<long long>(std::ceil(n));
    }
    return p;
}

struct RunOptions {
    unsigned threads = 0;  // 0: hardware concurrency
};

namespace detail {

inline std::vector<int> output_steps(const SimPlan &plan) {
    std::vector<int> out{0};
    for (int s = 1; s <= plan.steps; s++) {
        if (s % plan.output_every == 0 || s == plan.steps) {
            out.push_back(s);
        }
    }
    return out;
}

}  // namespace detail

/// Monte-Carlo estimate of Tr(O rho(t)) at the plan's output times.
inline SimulationResult run(const LindbladSpec &spec, const Matrix &observable, const DensityState &rho0, const SimPlan &plan,
                            const RunOptions &ropt = {}) {
    auto start = std::chrono::steady_clock::now();
    auto programs = build_programs(spec, plan);
    auto outs = detail::output_steps(plan);
    std::vector<double> mu_at(outs.size(), 1.0);
    {
        double mu = 1;
        size_t o = 1;
        for (int s = 0; s < plan.steps; s++) {
            mu *= programs[s]->mu();
            if (o < outs.size() && outs[o] == s + 1) {
                mu_at[o++] = mu;
            }
        }
    }
    const size_t P = outs.size();
    const long long N = plan.N;
    const long long block = 256;
    const long long nblocks = (N + block - 1) / block;
    // Per-block Welford mean and M2, merged in block order so the result is independent of threading.
    std::vector<double> means(static_cast<size_t>(nblocks) * P, 0.0), m2s(static_cast<size_t>(nblocks) * P, 0.0);
    double v0 = rho0.expectation(observable);

    auto work = [&](long long first_block, long long stride) {
        std::vector<double> vals(P);
        for (long long b = first_block; b < nblocks; b += stride) {
            double *bm = &means[static_cast<size_t>(b) * P];
            double *bq = &m2s[static_cast<size_t>(b) * P];
            double cnt = 0;
            for (long long r = b * block; r < std::min(N, (b + 1) * block); r++) {
                Rng rng = round_rng(plan.seed, static_cast<uint64_t>(r));
                Matrix rho = rho0.mat;
                vals[0] = v0;
                size_t o = 1;
                for (int s = 0; s < plan.steps; s++) {
                    programs[s]->run_sampled(rho, rng);
                    if (o < P && outs[o] == s + 1) {
                        vals[o] = mu_at[o] * trace_product(rho, observable).real();
                        o++;
                    }
                }
                cnt += 1;
                for (size_t k = 0; k < P; k++) {
                    double d = vals[k] - bm[k];
                    bm[k] += d / cnt;
                    bq[k] += d * (vals[k] - bm[k]);
                }
            }
        }
    };
    unsigned threads = ropt.threads ? ropt.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<long long>(threads, nblocks));
    if (threads <= 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; t++) {
            pool.emplace_back(work, t, threads);
        }
        for (auto &th : pool) {
            th.join();
        }
    }

    SimulationResult res;
    for (size_t k = 0; k < P; k++) {
        double n = 0, mean = 0, m2 = 0;
        for (long long b = 0; b < nblocks; b++) {
            double nb = static_cast<double>(std::min(N, (b + 1) * block) - b * block);
            double mb = means[static_cast<size_t>(b) * P + k];
            double d = mb - mean;
            double tot = n + nb;
            mean += d * nb / tot;
            m2 += m2s[static_cast<size_t>(b) * P + k] + d * d * n * nb / tot;
            n = tot;
        }
        double var = N > 1 ? m2 / (N - 1) : 0.0;
        double t = k == 0 ? 0.0 : std::min(plan.T, outs[k] * plan.tau);
        if (k + 1 == P && outs[k] == plan.steps) {
            t = plan.T;
        }
        res.trajectory.push_back({t, mean, std::sqrt(var / N), mu_at[k]});
    }
    res.report.mean = res.trajectory.back().mean;
    res.report.stderr_ = res.trajectory.back().stderr_;
    res.report.mu_total = mu_at.back();
    res.report.bias_budget = plan.bias_budget;
    res.report.rounds = N;
    res.report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

inline SimulationResult run_time_independent(const LindbladSpec &spec, const Matrix &observable, const DensityState &rho0,
                                             const SimPlan &plan, const RunOptions &ropt = {}) {
    if (spec.time_dependent()) {
        throw std::invalid_argument("run_time_independent: generator is time dependent");
    }
    return run(spec, observable, rho0, plan, ropt);
}

inline SimulationResult run_time_dependent(const LindbladSpec &spec, const Matrix &observable, const DensityState &rho0,
                                           const SimPlan &plan, const RunOptions &ropt = {}) {
    if (spec.time_dependent() && !spec.derivative_bound) {
        throw std::invalid_argument("run_time_dependent: missing derivative bound");
    }
    return run(spec, observable, rho0, plan, ropt);
}

/// Deterministic trajectory: each step applies the full truncated compensation maps
/// (the exact-sampling limit), or only the coarse stage when `coarse_only` is set.
inline std::vector<TrajectoryPoint> run_deterministic(const LindbladSpec &spec, const Matrix &observable, const DensityState &rho0,
                                                      const SimPlan &plan, bool coarse_only = false) {
    auto programs = build_programs(spec, plan);
    auto outs = detail::output_steps(plan);
    std::vector<TrajectoryPoint> out{{0.0, rho0.expectation(observable), 0.0, 1.0}};
    Matrix rho = rho0.mat;
    size_t o = 1;
    for (int s = 0; s < plan.steps; s++) {
        if (coarse_only) {
            programs[s]->run_coarse(rho);
        } else {
            programs[s]->run_expected(rho);
        }
        if (o < outs.size() && outs[o] == s + 1) {
            double t = s + 1 == plan.steps ? plan.T : (s + 1) * plan.tau;
            out.push_back({t, trace_product(rho, observable).real(), 0.0, 1.0});
            o++;
        }
    }
    return out;
}

}  // namespace lcsim

#endif
