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

// lcsim: batch front-end for the simulate, resources and validate subcommands.
//
// Exit codes: 0 success, 1 runtime failure or failed validation, 2 bad
// command line or config, 3 infeasible plan.

#include "lcsim/lcsim.hpp"

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

namespace {

using namespace lcsim;
namespace pt = boost::property_tree;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fully resolved problem and run description.
struct RunConfig {
    // problem
    std::string preset;  // empty: inline operators
    int n = 5;
    double J = -0.1, h = 0.2, gamma = 1.5;
    double h0 = 0.2, h1 = 0.1, omega = 1.0;
    std::string hamiltonian;          // Pauli-sum text
    std::vector<std::string> jumps;  // Pauli-sum text, one per jump operator
    // run
    double T = 1, epsilon = 0.02, delta = 0.05;
    std::optional<double> tau;
    std::optional<int> K;
    std::optional<long long> N;
    std::optional<int> M;
    uint64_t seed = 1;
    CoarseMode mode = CoarseMode::trotter;
    int output_every = 1;
    int max_order = kMaxDissipativeOrder;
    // observation
    std::string observable = "1 0 Z";
    std::string initial = "1";
    std::string initial_file;
    // resources
    std::vector<double> epsilons;
    // output
    std::string out;
};

template <class T>
std::optional<T> get_opt(const pt::ptree &tree, const std::string &key) {
    auto v = tree.get_optional<std::string>(key);
    if (!v || v->empty()) {
        return std::nullopt;
    }
    try {
        return tree.get<T>(key);
    } catch (const pt::ptree_bad_data &) {
        throw ConfigError("config: bad value for " + key + ": '" + *v + "'");
    }
}

std::vector<double> parse_list(const std::string &s) {
    std::vector<double> out;
    std::string tok;
    std::istringstream in(s);
    while (std::getline(in, tok, ',')) {
        auto first = tok.find_first_not_of(" \t");
        if (first == std::string::npos) {
            continue;
        }
        try {
            size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (tok.find_first_not_of(" \t", used) != std::string::npos) {
                throw std::invalid_argument(tok);
            }
        } catch (const std::exception &) {
            throw ConfigError("config: bad number in list: '" + tok + "'");
        }
    }
    return out;
}

void require_finite(double v, const std::string &name) {
    if (!std::isfinite(v)) {
        throw ConfigError("config: " + name + " must be finite");
    }
}

RunConfig defaults_for_preset(const std::string &name) {
    RunConfig c;
    c.preset = name;
    if (name == "amplitude-damping") {
        c.n = 1;
        c.T = 1;
        c.observable = "0.5 0 I; -0.5 0 Z";
        c.initial = "1";
        c.epsilons = {0.1, 1e-2, 1e-3, 1e-4};
    } else if (name == "tfi") {
        c.n = 5;
        c.T = 2;
        c.tau = 0.02;
        c.N = 100000;
        c.output_every = 10;
        c.observable = "1 0 ZIIII";
        c.initial = "10000";
        c.epsilons = {0.5, 0.1, 1e-2, 1e-3, 1e-4};
    } else if (name == "tfi-20") {
        c.n = 20;
        c.T = 1;
        c.observable = "1 0 Z" + std::string(19, 'I');
        c.initial = "1" + std::string(19, '0');
        c.epsilons = {0.9, 0.5, 0.1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10};
    } else if (name == "driven-qubit") {
        c.n = 1;
        c.T = 1;
        c.M = 8;
        c.observable = "0.5 0 I; -0.5 0 Z";
        c.initial = "1";
        c.epsilons = {0.1, 1e-2, 1e-3};
    } else {
        throw ConfigError("unknown preset '" + name + "' (amplitude-damping, tfi, tfi-20, driven-qubit)");
    }
    return c;
}

RunConfig load_config(const std::string &path) {
    pt::ptree tree;
    try {
        pt::read_ini(path, tree);
    } catch (const pt::ini_parser_error &e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    auto preset = tree.get<std::string>("problem.preset", "");
    RunConfig c = preset.empty() ? RunConfig{} : defaults_for_preset(preset);
    auto set = [&]<class T>(T &field, const std::string &key) {
        if (auto v = get_opt<T>(tree, key)) {
            field = *v;
        }
    };
    auto set_opt = [&]<class T>(std::optional<T> &field, const std::string &key) {
        if (auto v = get_opt<T>(tree, key)) {
            field = *v;
        }
    };
    set(c.n, "problem.n");
    set(c.J, "problem.J");
    set(c.h, "problem.h");
    set(c.gamma, "problem.gamma");
    set(c.h0, "problem.h0");
    set(c.h1, "problem.h1");
    set(c.omega, "problem.omega");
    set(c.hamiltonian, "problem.hamiltonian");
    if (auto js = tree.get_child_optional("jumps")) {
        for (auto &[key, v] : *js) {
            c.jumps.push_back(v.get_value<std::string>());
        }
    }
    set(c.T, "run.T");
    set(c.epsilon, "run.epsilon");
    set(c.delta, "run.delta");
    set_opt(c.tau, "run.tau");
    set_opt(c.K, "run.K");
    set_opt(c.N, "run.N");
    set_opt(c.M, "run.M");
    set(c.seed, "run.seed");
    set(c.output_every, "run.output_every");
    set(c.max_order, "run.max_order");
    if (auto m = get_opt<std::string>(tree, "run.mode")) {
        try {
            c.mode = coarse_mode_from_string(*m);
        } catch (const std::invalid_argument &e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }
    set(c.observable, "observe.observable");
    set(c.initial, "observe.initial");
    set(c.initial_file, "observe.initial_file");
    if (auto e = get_opt<std::string>(tree, "resources.epsilons")) {
        c.epsilons = parse_list(*e);
    } else if (tree.get_optional<std::string>("resources.epsilons")) {
        c.epsilons.clear();
    }
    set(c.out, "output.path");
    return c;
}

void validate_config(const RunConfig &c) {
    for (auto [v, name] : {std::pair{c.J, "problem.J"}, {c.h, "problem.h"}, {c.gamma, "problem.gamma"}, {c.h0, "problem.h0"},
                           {c.h1, "problem.h1"}, {c.omega, "problem.omega"}, {c.T, "run.T"}, {c.epsilon, "run.epsilon"},
                           {c.delta, "run.delta"}}) {
        require_finite(v, name);
    }
    if (c.preset.empty() && c.hamiltonian.empty() && c.jumps.empty()) {
        throw ConfigError("config: give problem.preset or problem.hamiltonian / [jumps]");
    }
    if (c.n < 1 || c.n > 63) {
        throw ConfigError("config: problem.n must lie in [1, 63]");
    }
    if (c.gamma < 0) {
        throw ConfigError("config: problem.gamma must be non-negative");
    }
    if (!(c.T > 0)) {
        throw ConfigError("config: run.T must be positive");
    }
    if (!(c.epsilon > 0 && c.epsilon < 1) || !(c.delta > 0 && c.delta < 1)) {
        throw ConfigError("config: run.epsilon and run.delta must lie in (0, 1)");
    }
    if (c.tau && !(*c.tau > 0 && std::isfinite(*c.tau))) {
        throw ConfigError("config: run.tau must be positive");
    }
    if (c.K && (*c.K < 0 || *c.K > kMaxDissipativeOrder)) {
        throw ConfigError("config: run.K must lie in [0, " + std::to_string(kMaxDissipativeOrder) + "]");
    }
    if (c.N && *c.N < 1) {
        throw ConfigError("config: run.N must be at least 1");
    }
    if (c.M && *c.M < 1) {
        throw ConfigError("config: run.M must be at least 1");
    }
    if (c.output_every < 1) {
        throw ConfigError("config: run.output_every must be at least 1");
    }
    if (c.max_order < 0 || c.max_order > kMaxDissipativeOrder) {
        throw ConfigError("config: run.max_order must lie in [0, " + std::to_string(kMaxDissipativeOrder) + "]");
    }
    for (double e : c.epsilons) {
        if (!(e > 0 && e < 1)) {
            throw ConfigError("config: resources.epsilons entries must lie in (0, 1)");
        }
    }
}

LindbladSpec make_spec(const RunConfig &c) {
    try {
        if (c.preset == "amplitude-damping") {
            return amplitude_damping_spec(c.gamma);
        }
        if (c.preset == "tfi" || c.preset == "tfi-20") {
            return tfi_spec(c.n, c.J, c.h, c.gamma);
        }
        if (c.preset == "driven-qubit") {
            return driven_qubit_spec(c.h0, c.h1, c.omega, c.gamma);
        }
        PauliSum h = c.hamiltonian.empty() ? PauliSum(c.n) : PauliSum::parse(c.hamiltonian);
        std::vector<PauliSum> ds;
        for (auto &j : c.jumps) {
            ds.push_back(PauliSum::parse(j, h.num_qubits()));
        }
        return LindbladSpec(h, ds);
    } catch (const std::invalid_argument &e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

Matrix load_density_file(const std::string &path) {
    std::ifstream f(path);
    if (!f) {
        throw ConfigError("config: cannot read " + path);
    }
    std::vector<std::vector<cplx>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t\r")] == '#') {
            continue;
        }
        std::istringstream in(line);
        std::vector<cplx> row;
        double re, im;
        while (in >> re >> im) {
            row.emplace_back(re, im);
        }
        if (!in.eof()) {
            throw ConfigError("config: malformed density-matrix row in " + path);
        }
        rows.push_back(row);
    }
    Eigen::Index d = static_cast<Eigen::Index>(rows.size());
    Matrix m(d, d);
    for (Eigen::Index i = 0; i < d; i++) {
        if (static_cast<Eigen::Index>(rows[i].size()) != d) {
            throw ConfigError("config: density matrix in " + path + " is not square");
        }
        for (Eigen::Index j = 0; j < d; j++) {
            m(i, j) = rows[i][j];
        }
    }
    return m;
}

DensityState make_initial(const RunConfig &c, int n) {
    try {
        DensityState s = c.initial_file.empty() ? DensityState::basis(c.initial) : DensityState(load_density_file(c.initial_file));
        if (s.n != n) {
            throw ConfigError("config: initial state has " + std::to_string(s.n) + " qubits, problem has " + std::to_string(n));
        }
        return s;
    } catch (const std::invalid_argument &e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

Matrix make_observable(const RunConfig &c, int n) {
    try {
        return PauliSum::parse(c.observable, n).dense();
    } catch (const std::invalid_argument &e) {
        throw ConfigError(std::string("config: observable: ") + e.what());
    }
}

PlanOptions plan_options(const RunConfig &c) {
    PlanOptions o;
    o.tau = c.tau;
    o.K = c.K;
    o.N = c.N;
    o.M = c.M;
    o.seed = c.seed;
    o.mode = c.mode;
    o.output_every = c.output_every;
    o.max_order = c.max_order;
    return o;
}

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

/// INI echo of the resolved config; the planner-filled tau, K, N and M are written out.
void write_config_echo(std::ostream &os, const RunConfig &c, const SimPlan &p) {
    pt::ptree t;
    if (!c.preset.empty()) {
        t.put("problem.preset", c.preset);
    }
    t.put("problem.n", c.n);
    t.put("problem.J", fmt(c.J));
    t.put("problem.h", fmt(c.h));
    t.put("problem.gamma", fmt(c.gamma));
    t.put("problem.h0", fmt(c.h0));
    t.put("problem.h1", fmt(c.h1));
    t.put("problem.omega", fmt(c.omega));
    auto one_line = [](std::string s) {
        std::replace(s.begin(), s.end(), '\n', ';');
        return s;
    };
    if (!c.hamiltonian.empty()) {
        t.put("problem.hamiltonian", one_line(c.hamiltonian));
    }
    for (size_t l = 0; l < c.jumps.size(); l++) {
        t.put("jumps.d" + std::to_string(l), one_line(c.jumps[l]));
    }
    t.put("run.T", fmt(p.T));
    t.put("run.epsilon", fmt(p.epsilon));
    t.put("run.delta", fmt(p.delta));
    t.put("run.tau", fmt(p.tau));
    t.put("run.K", p.K);
    t.put("run.N", p.N);
    t.put("run.M", p.M);
    t.put("run.seed", p.seed);
    t.put("run.mode", to_string(p.mode));
    t.put("run.output_every", p.output_every);
    t.put("run.max_order", c.max_order);
    t.put("observe.observable", one_line(c.observable));
    if (c.initial_file.empty()) {
        t.put("observe.initial", c.initial);
    } else {
        t.put("observe.initial_file", c.initial_file);
    }
    std::string eps;
    for (size_t i = 0; i < c.epsilons.size(); i++) {
        eps += (i ? "," : "") + fmt(c.epsilons[i]);
    }
    t.put("resources.epsilons", eps);
    pt::write_ini(os, t);
}

nlohmann::json plan_json(const SimPlan &p) {
    return {{"T", p.T},         {"epsilon", p.epsilon},         {"delta", p.delta},
            {"tau", p.tau},     {"steps", p.steps},             {"last_tau", p.last_tau},
            {"K", p.K},         {"M", p.M},                     {"N", p.N},
            {"seed", p.seed},   {"mode", to_string(p.mode)},    {"lambda", p.lambda},
            {"mu_total", p.mu_total}, {"bias_budget", p.bias_budget}, {"time_dependent", p.time_dependent}};
}

std::ofstream open_out(const std::string &path) {
    std::ofstream f(path);
    if (!f) {
        throw std::runtime_error("cannot write " + path);
    }
    return f;
}

int cmd_simulate(const RunConfig &c, bool with_exact) {
    LindbladSpec spec = make_spec(c);
    DensityState rho0 = make_initial(c, spec.n);
    Matrix obs = make_observable(c, spec.n);
    SimPlan p = plan(spec, c.T, c.epsilon, c.delta, plan_options(c));
    std::cerr << "plan: steps=" << p.steps << " tau=" << p.tau << " K=" << p.K << " M=" << p.M << " N=" << p.N
              << " mu_total=" << p.mu_total << " bias_budget=" << p.bias_budget << '\n';
    auto r = spec.time_dependent() ? run_time_dependent(spec, obs, rho0, p) : run_time_independent(spec, obs, rho0, p);
    std::cerr << "wall time " << r.report.wall_time << " s\n";

    std::vector<double> exact;
    if (with_exact) {
        std::vector<double> times;
        for (auto &pt : r.trajectory) {
            times.push_back(pt.time);
        }
        if (spec.time_dependent()) {
            exact = rk4_propagate(spec, rho0.mat, obs, times, std::min(1e-3, p.tau / 16)).expectations;
        } else if (spec.n <= kOracleLimit) {
            exact = exact_propagate(spec, rho0.mat, obs, times).expectations;
        } else {
            exact = rk4_propagate(spec, rho0.mat, obs, times, std::min(1e-2, p.tau / 4)).expectations;
        }
    }

    std::ofstream file;
    if (!c.out.empty()) {
        file = open_out(c.out + ".csv");
    }
    std::ostream &csv = c.out.empty() ? std::cout : file;
    csv << std::setprecision(12) << "time,estimate,stderr" << (with_exact ? ",exact,abs_error" : "") << '\n';
    for (size_t k = 0; k < r.trajectory.size(); k++) {
        auto &pt = r.trajectory[k];
        csv << pt.time << ',' << pt.mean << ',' << pt.stderr_;
        if (with_exact) {
            csv << ',' << exact[k] << ',' << std::abs(pt.mean - exact[k]);
        }
        csv << '\n';
    }

    nlohmann::json report{{"mean", r.report.mean},         {"stderr", r.report.stderr_},
                          {"mu_total", r.report.mu_total}, {"bias_budget", r.report.bias_budget},
                          {"rounds", r.report.rounds},     {"plan", plan_json(p)}};
    if (!c.out.empty()) {
        open_out(c.out + ".json") << report.dump(2) << '\n';
        auto echo = open_out(c.out + ".ini");
        write_config_echo(echo, c, p);
    } else {
        std::cerr << report.dump(2) << '\n';
    }
    return 0;
}

int cmd_resources(const RunConfig &c, std::optional<int> order) {
    LindbladSpec spec = make_spec(c);
    PlanOptions o = plan_options(c);
    auto rows = precision_table(spec, c.T, c.epsilons, o);
    std::ofstream file;
    if (!c.out.empty()) {
        file = open_out(c.out + ".csv");
    }
    std::ostream &csv = c.out.empty() ? std::cout : file;
    write_resource_csv(csv, rows);

    // Per-step summary: the trotter row and two-stage rows for the requested K (default: the Ks of the table).
    std::vector<int> ks;
    if (order) {
        ks.push_back(*order);
    } else {
        for (auto &r : rows) {
            if (r.report.method == Method::two_stage && std::find(ks.begin(), ks.end(), r.report.K) == ks.end()) {
                ks.push_back(r.report.K);
            }
        }
    }
    std::ofstream step_file;
    if (!c.out.empty()) {
        step_file = open_out(c.out + ".per_step.csv");
    }
    std::ostream &steps = c.out.empty() ? std::cerr : step_file;
    steps << "method,K,rz_per_step,cnot_per_step,ancillas\n";
    auto emit = [&](const ResourceReport &r) {
        steps << to_string(r.method) << ',' << r.K << ',' << r.rz_per_step << ',' << r.cnot_per_step << ',' << r.ancillas << '\n';
    };
    emit(count_step(spec, Method::trotter, 0));
    for (int K : ks) {
        emit(count_step(spec, Method::two_stage, K));
    }
    return 0;
}

/// Fast invariant suite on dense 1-qubit instances.
int cmd_validate(const std::optional<RunConfig> &c) {
    struct Row {
        std::string name;
        bool ok;
        std::string detail;
    };
    std::vector<Row> rows;
    auto check = [&](const std::string &name, auto &&fn) {
        try {
            auto [ok, detail] = fn();
            rows.push_back({name, ok, detail});
        } catch (const std::exception &e) {
            rows.push_back({name, false, std::string("exception: ") + e.what()});
        }
    };

    auto coeffs = build_dissipative_coefficients(8);
    check("a-norm table", [&] {
        const double want[4] = {1, 0, 1.5833, 2.0472};
        std::ostringstream s;
        bool ok = true;
        for (int k = 0; k < 4; k++) {
            s << (k ? ", " : "(") << std::fixed << std::setprecision(4) << coeffs.a_norm(k);
            ok = ok && std::abs(coeffs.a_norm(k) - want[k]) <= 5e-5;
        }
        s << ")";
        return std::pair{ok, s.str()};
    });
    check("geometric bound a_k <= 2.6^(k-2) a_2, k <= 8", [&] {
        double worst = 0;
        for (int k = 3; k <= 8; k++) {
            worst = std::max(worst, coeffs.a_norm(k) / (std::pow(kLambda, k - 2) * coeffs.a_norm(2)));
        }
        return std::pair{worst <= 1, "max ratio " + fmt(worst)};
    });
    check("convolution identity, k <= 8", [&] {
        double worst = 0;
        for (int k = 0; k <= 8; k++) {
            worst = std::max(worst, coeffs.convolution_residual(k));
        }
        return std::pair{worst <= 1e-12, "residual " + fmt(worst)};
    });
    check("pi-symmetry within commutation classes", [&] {
        double worst = 0;
        for (int k = 0; k <= 8; k++) {
            worst = std::max(worst, coeffs.pi_symmetry_residual(k));
        }
        return std::pair{worst <= 1e-12, "residual " + fmt(worst)};
    });

    PauliSum x(1);
    x.add("X", 0.4);
    x.add("Z", 0.3);
    LindbladSnapshot snap{x, {lowering_operator(1, 0, 1.5)}};
    const double tau = 0.05;
    check("M mu closed form", [&] {
        double xs = 0;
        for (auto &p : generator_pieces(snap)) {
            xs += p.one_norm();
        }
        double want = 1 + std::pow(2 * xs * tau, 2) / 2 + std::pow(2 * xs * tau, 3) / 6;
        double got = build_M(snap, tau, 3).mu();
        return std::pair{std::abs(got - want) <= 1e-12, fmt(got) + " vs " + fmt(want)};
    });
    check("M convergence K = 1..4", [&] {
        Matrix exact = expm(tau * to_dense_superop(lindbladian_chi(snap)));
        Matrix coarse = expm(tau * to_dense_superop(chi_of_hamiltonian(snap.H)));
        for (auto &d : snap.jumps) {
            coarse = expm(tau * to_dense_superop(chi_of_dissipator(d))) * coarse;
        }
        std::ostringstream s;
        double prev = std::numeric_limits<double>::infinity();
        bool ok = true;
        for (int K = 1; K <= 4; K++) {
            LcsFormula m = build_M(snap, tau, K);
            double e = induced_trace_norm(m.expected_superop() * coarse - exact);
            ok = ok && e < prev && e <= m.bias();
            s << (K > 1 ? " " : "") << std::scientific << std::setprecision(2) << e;
            prev = e;
        }
        return std::pair{ok, s.str()};
    });
    check("LCS reconstruction", [&] {
        ChiMap chi = lindbladian_chi(snap);
        LcsFormula f = from_chi(chi);
        double d = (to_dense_superop(reconstruct_chi(f)) - to_dense_superop(chi)).cwiseAbs().maxCoeff();
        return std::pair{d <= 1e-12, "max deviation " + fmt(d)};
    });
    check("qubit-reuse identity", [&] {
        LcsFormula f = from_chi(chi_of_hamiltonian(x)), g = from_chi(chi_of_dissipator(lowering_operator(1, 0, 1.5)));
        double d = reuse_equivalence_check(f, g);
        return std::pair{d <= 1e-10, "max deviation " + fmt(d)};
    });
    check("gate counts, 20-qubit TFI", [&] {
        LindbladSpec tfi = tfi_spec(20);
        auto t = count_step(tfi, Method::trotter, 0);
        auto s = count_step(tfi, Method::two_stage, 2);
        bool ok = t.rz_per_step == 42 && t.cnot_per_step == 44 && s.rz_per_step == 51 && s.cnot_per_step == 48 + 32;
        return std::pair{ok, "trotter " + std::to_string(t.rz_per_step) + "/" + std::to_string(t.cnot_per_step) + ", two-stage K=2 " +
                                 std::to_string(s.rz_per_step) + "/" + std::to_string(s.cnot_per_step)};
    });
    if (c) {
        check("config plans", [&] {
            LindbladSpec spec = make_spec(*c);
            make_initial(*c, spec.n);
            make_observable(*c, spec.n);
            SimPlan p = plan(spec, c->T, c->epsilon, c->delta, plan_options(*c));
            return std::pair{true, "steps " + std::to_string(p.steps) + ", K " + std::to_string(p.K) + ", N " + std::to_string(p.N)};
        });
    }

    bool all = true;
    size_t width = 0;
    for (auto &r : rows) {
        width = std::max(width, r.name.size());
    }
    for (auto &r : rows) {
        std::cout << (r.ok ? "ok   " : "FAIL ") << std::left << std::setw(static_cast<int>(width) + 2) << r.name << r.detail << '\n';
        all = all && r.ok;
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"lcsim: two-stage Lindbladian simulation and resource estimation"};
    app.require_subcommand(1);
    std::string config_path, preset, out;
    std::optional<uint64_t> seed;
    std::optional<long long> rounds;
    std::optional<int> order;
    std::optional<double> tau;
    bool with_exact = false;

    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--config", config_path, "INI problem description")->check(CLI::ExistingFile);
        sub->add_option("--preset", preset, "amplitude-damping, tfi, tfi-20 or driven-qubit");
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("--rounds", rounds, "Monte-Carlo rounds N");
        sub->add_option("--order", order, "compensation order K");
        sub->add_option("--tau", tau, "step size");
        sub->add_option("--out", out, "output path prefix");
    };
    auto *simulate = app.add_subcommand("simulate", "estimate Tr(O rho(t)) along a trajectory");
    add_common(simulate);
    simulate->add_flag("--with-exact", with_exact, "add the dense oracle and absolute error columns");
    auto *resources = app.add_subcommand("resources", "gate-count table over an epsilon grid");
    add_common(resources);
    auto *validate = app.add_subcommand("validate", "run the fast invariant suite");
    add_common(validate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 2;
    }

    try {
        std::optional<RunConfig> cfg;
        if (!config_path.empty() && !preset.empty()) {
            throw ConfigError("give either --config or --preset");
        }
        if (!config_path.empty()) {
            cfg = load_config(config_path);
        } else if (!preset.empty()) {
            cfg = defaults_for_preset(preset);
        }
        if (cfg) {
            if (seed) {
                cfg->seed = *seed;
            }
            if (rounds) {
                cfg->N = *rounds;
            }
            if (order) {
                cfg->K = *order;
            }
            if (tau) {
                cfg->tau = *tau;
            }
            if (!out.empty()) {
                cfg->out = out;
            }
            validate_config(*cfg);
        }
        if (*validate) {
            return cmd_validate(cfg);
        }
        if (!cfg) {
            throw ConfigError("give --config or --preset");
        }
        if (*simulate) {
            return cmd_simulate(*cfg, with_exact);
        }
        return cmd_resources(*cfg, order);
    } catch (const ConfigError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const PlanInfeasible &e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return 3;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
