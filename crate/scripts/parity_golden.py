"""Regenerate the parity trajectory goldens with a dense numpy model.

The model is assembled independently of the Rust crate (dense matrices on the
n1+n2 <= N simplex, full-matrix eigh) and evolves |n0,0,-> under the default
parameters: omega=1, omega0=2, g=1, lambda1=lambda2=-1/2, s=4, r1=0, r2=1/4.

    python3 scripts/parity_golden.py crates/core/tests/golden
"""

import sys
from pathlib import Path

import numpy as np

T_MAX = 100.0
N_STEPS = 1000
PARAMS = dict(omega0=2.0, omega=1.0, s=4.0, r1=0.0, r2=0.25, g=1.0, lambda1=-0.5, lambda2=-0.5)


def basis(n_max):
    return [(n1, m - n1, s) for m in range(n_max + 1) for n1 in range(m + 1) for s in (0, 1)]


def operator(kets, action):
    index = {k: i for i, k in enumerate(kets)}
    m = np.zeros((len(kets), len(kets)), dtype=complex)
    for j, k in enumerate(kets):
        for out, amp in action(*k):
            if out in index:
                m[index[out], j] += amp
    return m


def hamiltonian(kets, p):
    a1 = operator(kets, lambda n1, n2, s: [((n1 - 1, n2, s), np.sqrt(n1))] if n1 else [])
    a2 = operator(kets, lambda n1, n2, s: [((n1, n2 - 1, s), np.sqrt(n2))] if n2 else [])
    sp = operator(kets, lambda n1, n2, s: [((n1, n2, 1), 1.0)] if s == 0 else [])
    sz = operator(kets, lambda n1, n2, s: [((n1, n2, s), s - 0.5)])
    dag = lambda x: x.conj().T
    total = dag(a1) @ a1 + dag(a2) @ a2
    h = p["omega0"] * sz + p["omega"] * total + p["s"] * sz @ total
    hop = p["r1"] * dag(a2) @ a1 + p["r2"] * dag(a2) @ a1 @ sz
    absorb = (p["lambda1"] * a1 @ a1 + p["lambda2"] * a2 @ a2 + p["g"] * a1 @ a2) @ sp
    return h + hop + dag(hop) + absorb + dag(absorb)


def trajectory(n0):
    kets = basis(n0)
    h = hamiltonian(kets, PARAMS)
    energies, vectors = np.linalg.eigh(h)
    psi0 = np.zeros(len(kets), dtype=complex)
    psi0[kets.index((n0, 0, 0))] = 1.0
    coeffs = vectors.conj().T @ psi0
    times = np.array([T_MAX * k / N_STEPS for k in range(N_STEPS + 1)])
    states = vectors @ (np.exp(-1j * np.outer(energies, times)) * coeffs[:, None])
    prob = np.abs(states) ** 2
    n1 = np.array([k[0] for k in kets], dtype=float)
    n2 = np.array([k[1] for k in kets], dtype=float)
    sz = np.array([k[2] - 0.5 for k in kets], dtype=float)
    norm2 = prob.sum(axis=0)
    m1, m2, mz = n1 @ prob, n2 @ prob, sz @ prob
    return times, m1, m2, mz, np.abs(np.sqrt(norm2) - 1.0), m1 + m2 + 2.0 * (mz + 0.5 * norm2)


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for n0 in range(2, 8):
        cols = trajectory(n0)
        lines = ["t,n1_mean,n2_mean,sz_mean,norm_err,excitation"]
        lines += [",".join(repr(float(c[i])) for c in cols) for i in range(len(cols[0]))]
        (out / f"parity_n0_{n0}.csv").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/golden")
