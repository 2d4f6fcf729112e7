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

#ifndef LCSIM_PRESETS_HPP
#define LCSIM_PRESETS_HPP

#include "lcsim/superop.hpp"

namespace lcsim {

/// sqrt(gamma) |0><1| on qubit q: sqrt(gamma) (X + iY) / 2.
inline PauliSum lowering_operator(int n, int q, double gamma) {
    PauliSum d(n);
    uint64_t b = uint64_t{1} << q;
    double s = std::sqrt(gamma) / 2;
    d.add(PauliString(n, b, 0), s);
    d.add(PauliString(n, b, b), cplx(0, s));
    return d;
}

/// Periodic transverse-field Ising chain J sum Z_i Z_{i+1} + h sum X_i; ZZ bonds first, then fields.
inline PauliSum tfi_hamiltonian(int n, double J, double h) {
    PauliSum H(n);
    for (int i = 0; i < n; i++) {
        int j = (i + 1) % n;
        if (j == i) {
            continue;
        }
        H.add(PauliString(n, 0, (uint64_t{1} << i) | (uint64_t{1} << j)), J);
    }
    for (int i = 0; i < n; i++) {
        H.add(PauliString(n, uint64_t{1} << i, 0), h);
    }
    return H.prune();
}

/// TFI chain with amplitude damping on qubit 0.
inline LindbladSpec tfi_spec(int n = 5, double J = -0.1, double h = 0.2, double gamma = 1.5) {
    return LindbladSpec(tfi_hamiltonian(n, J, h), {lowering_operator(n, 0, gamma)});
}

/// One qubit, H = 0, D = sqrt(gamma) |0><1|.
inline LindbladSpec amplitude_damping_spec(double gamma = 1.5) { return LindbladSpec(PauliSum(1), {lowering_operator(1, 0, gamma)}); }

/// H(t) = (h0 + h1 sin(omega t)) X with amplitude damping; ||Ldot|| <= 2 |h1| omega.
inline LindbladSpec driven_qubit_spec(double h0 = 0.2, double h1 = 0.1, double omega = 1.0, double gamma = 1.5) {
    PauliSum x(1);
    x.add("X", 1.0);
    LindbladSpec spec(x.scaled(h0), {lowering_operator(1, 0, gamma)});
    PauliSum d = lowering_operator(1, 0, gamma);
    spec.schedule = [=](double t) { return LindbladSnapshot{x.scaled(h0 + h1 * std::sin(omega * t)), {d}}; };
    spec.derivative_bound = 2 * std::abs(h1) * omega;
    return spec;
}

}  // namespace lcsim

#endif
