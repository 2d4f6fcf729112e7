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

#ifndef LCSIM_RESOURCES_HPP
#define LCSIM_RESOURCES_HPP

#include "lcsim/estimator.hpp"

#include <ostream>

namespace lcsim {

enum class Method { trotter, two_stage };

inline const char *to_string(Method m) { return m == Method::trotter ? "trotter" : "two-stage"; }

inline Method method_from_string(std::string_view s) {
    if (s == "trotter") {
        return Method::trotter;
    }
    if (s == "two-stage" || s == "two_stage") {
        return Method::two_stage;
    }
    throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

struct ResourceReport {
    long long rz_per_step = 0;
    long long cnot_per_step = 0;
    long long steps = 1;
    long long total_rz = 0;
    long long total_cnot = 0;
    int ancillas = 1;
    Method method = Method::trotter;
    int K = 0;

    void set_steps(long long s) {
        steps = s;
        total_rz = rz_per_step * steps;
        total_cnot = cnot_per_step * steps;
    }
};

namespace detail {

struct GateCount {
    long long rz = 0;
    long long cnot = 0;
};

/// e^{-i theta P} for a weight-w string: CNOT ladder down and back around one Rz.
inline GateCount rotation_cost(const PauliString &p) {
    int w = p.weight();
    if (w == 0) {
        return {};
    }
    return {1, 2LL * (w - 1)};
}

inline GateCount trotter_cost(const PauliSum &h) {
    GateCount g;
    for (auto &[p, c] : h.terms()) {
        auto r = rotation_cost(p);
        g.rz += r.rz;
        g.cnot += r.cnot;
    }
    return g;
}

}  // namespace detail

/// @brief Per-step Rz/CNOT count of one step under the compilation templates.
///
/// Trotter: one Pauli rotation per H term and per dilation term.
/// Two-stage adds, for each of the 2 + 2m compensation formulas, two controlled
/// Pauli gadgets of weight w_gen K; F and each J carry a controlled-rotation
/// core (3 Rz, 2 CNOT); F, each N and M carry one ancilla phase Rz.
inline ResourceReport count_step(const LindbladSpec &spec, Method method, int K) {
    if (K < 0) {
        throw std::invalid_argument("count_step: negative order");
    }
    LindbladSnapshot s = spec.at(0);
    for (auto &[p, c] : s.H.terms()) {
        if (std::abs(c.imag()) > 1e-12) {
            throw std::invalid_argument("count_step: H has a non-Hermitian term, no rotation template applies");
        }
    }
    ResourceReport r;
    r.method = method;
    r.K = method == Method::trotter ? 0 : K;
    detail::GateCount g = detail::trotter_cost(s.H);
    int w_gen = 0;
    for (auto &[p, c] : s.H.terms()) {
        w_gen = std::max(w_gen, p.weight());
    }
    for (auto &d : s.jumps) {
        PauliSum j = dilation_operator(d);
        auto jc = detail::trotter_cost(j);
        g.rz += jc.rz;
        g.cnot += jc.cnot;
        for (auto &[p, c] : d.terms()) {
            w_gen = std::max(w_gen, p.weight());
        }
    }
    if (method == Method::two_stage) {
        long long m = static_cast<long long>(s.jumps.size());
        long long formulas = 2 + 2 * m;
        g.cnot += formulas * 2 * static_cast<long long>(w_gen) * K;
        g.rz += (1 + m) * 3;
        g.cnot += (1 + m) * 2;
        g.rz += 2 + m;
        r.ancillas = 2;
    } else {
        r.ancillas = 1;
    }
    r.rz_per_step = g.rz;
    r.cnot_per_step = g.cnot;
    r.set_steps(1);
    return r;
}

/// sum_{g=0, g != 1}^{K} (2 x)^g / g!, the 1-norm bound of the collected Trotter compensation operator.
inline double conjugation_norm_bound(double x, int K) {
    double s = 1;
    for (int g = 2; g <= K; g++) {
        s += std::pow(2 * x, g) / factorial(g);
    }
    return s;
}

/// @brief Step bound from closed-form norms, for registers too wide to expand F and J.
inline LcsBound step_bound_estimate(const LindbladSnapshot &snap, double tau, int K, const DissipativeCoefficients &coeffs,
                                    double lambda = kLambda) {
    auto conj = [&](double hn, double t, int k) {
        double eps = std::pow(2 * std::numbers::e * hn * t / (k + 1), k + 1);
        double m = conjugation_norm_bound(hn * t, k);
        return LcsBound{m * m, 2 * eps + eps * eps, true};
    };
    LcsBound inner = conj(norm(snap.H, 1), tau, K);
    for (auto &d : snap.jumps) {
        double jn = norm(dilation_operator(d), 1);
        LcsBound b = compose_bounds(build_N(d, tau, K, coeffs, lambda).bound(), conj(jn, std::sqrt(tau), 2 * K));
        b.cptp_target = true;
        inner = compose_bounds(b, inner);
    }
    LcsBound step = compose_bounds(build_M(snap, tau, K).bound(), inner);
    step.cptp_target = true;
    return step;
}

struct ResourceRow {
    double epsilon = 0;
    ResourceReport report;
};

/// Trotter steps from the first-order bound Lambda^2 T tau <= eps; two-stage keeps the planned tau and raises K.
inline std::vector<ResourceRow> precision_table(const LindbladSpec &spec, double T, const std::vector<double> &eps_grid,
                                                const PlanOptions &opt = {}) {
    if (!(T > 0)) {
        throw std::invalid_argument("precision_table: T must be positive");
    }
    for (double e : eps_grid) {
        if (!(e > 0 && e < 1)) {
            throw std::invalid_argument("precision_table: epsilon must lie in (0, 1)");
        }
    }
    LindbladSnapshot snap = spec.at(0);
    double ln = pauli_norm(snap);
    double tau = ln > 0 ? opt.c_tau / (ln * ln * T) : T;
    tau = std::min({tau, max_admissible_tau(spec, T, opt.lambda), T});
    long long steps = static_cast<long long>(std::ceil(T / tau - 1e-9));
    DissipativeCoefficients coeffs = build_dissipative_coefficients(opt.max_order);
    std::vector<double> budgets;
    for (int K = 0; K <= opt.max_order; K++) {
        double b = step_bound_estimate(snap, tau, K, coeffs, opt.lambda).bias;
        budgets.push_back(std::expm1(static_cast<double>(steps) * std::log1p(b)));
    }
    std::vector<ResourceRow> rows;
    for (double e : eps_grid) {
        ResourceReport tr = count_step(spec, Method::trotter, 0);
        tr.set_steps(std::max<long long>(1, static_cast<long long>(std::ceil(ln * ln * T * T / e * (1 - 1e-12)))));
        rows.push_back({e, tr});
        int K = 0;
        while (K < opt.max_order && budgets[K] > e) {
            K++;
        }
        if (budgets[K] > e) {
            throw PlanInfeasible("precision_table: no order up to " + std::to_string(opt.max_order) + " meets epsilon " +
                                 std::to_string(e));
        }
        ResourceReport ts = count_step(spec, Method::two_stage, K);
        ts.set_steps(steps);
        rows.push_back({e, ts});
    }
    return rows;
}

inline void write_resource_csv(std::ostream &os, const std::vector<ResourceRow> &rows) {
    os << "epsilon,method,steps,K,rz_total,cnot_total\n";
    for (auto &r : rows) {
        os << r.epsilon << ',' << to_string(r.report.method) << ',' << r.report.steps << ',' << r.report.K << ','
           << r.report.total_rz << ',' << r.report.total_cnot << '\n';
    }
}

}  // namespace lcsim

#endif
