"""Reference values for POVM-level incompatibility measures.

Solves the generalized robustness and the convex weight of qubit POVM
collections with cvxpy/Clarabel. The numbers printed here are frozen into
tests/unit/test_incompat.cpp; rerun this script to regenerate them.
With --fixture it also writes seeded random collections and their values to
povm_fixture.json next to this file.
"""
import itertools
import json
import pathlib
import sys

import cvxpy as cp
import numpy as np


def sharp(axis):
    paulis = {
        "x": np.array([[0, 1], [1, 0]], dtype=complex),
        "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
        "z": np.array([[1, 0], [0, -1]], dtype=complex),
    }
    s = paulis[axis]
    eye = np.eye(2)
    return [(eye + s) / 2, (eye - s) / 2]


def unsharp(axis, eta):
    eye = np.eye(2)
    return [eta * e + (1 - eta) * eye / 2 for e in sharp(axis)]


def robustness(povms):
    m, o, d = len(povms), len(povms[0]), povms[0][0].shape[0]
    vecs = list(itertools.product(range(o), repeat=m))
    q = {v: cp.Variable((d, d), hermitian=True) for v in vecs}
    s = cp.Variable()
    cons = [q[v] >> 0 for v in vecs]
    cons.append(sum(q[v] for v in vecs) == s * np.eye(d))
    for al in range(m):
        for a in range(o):
            cons.append(sum(q[v] for v in vecs if v[al] == a) - povms[al][a] >> 0)
    prob = cp.Problem(cp.Minimize(s), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11)
    return s.value - 1


def weight(povms):
    m, o, d = len(povms), len(povms[0]), povms[0][0].shape[0]
    vecs = list(itertools.product(range(o), repeat=m))
    g = {v: cp.Variable((d, d), hermitian=True) for v in vecs}
    gamma = cp.Variable()
    cons = [g[v] >> 0 for v in vecs]
    cons.append(sum(g[v] for v in vecs) == gamma * np.eye(d))
    for al in range(m):
        for a in range(o):
            cons.append(povms[al][a] - sum(g[v] for v in vecs if v[al] == a) >> 0)
    prob = cp.Problem(cp.Maximize(gamma), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11)
    return 1 - gamma.value


def haar_unitary(rng, d):
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_unsharp_projective(rng, eta):
    u = haar_unitary(rng, 2)
    eye = np.eye(2)
    return [eta * np.outer(u[:, k], u[:, k].conj()) + (1 - eta) * eye / 2 for k in range(2)]


def random_general(rng, o):
    a = []
    for _ in range(o):
        g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        a.append(g @ g.conj().T)
    s = sum(a)
    w, v = np.linalg.eigh(s)
    k = v @ np.diag(w ** -0.5) @ v.conj().T
    return [k @ x @ k for x in a]


def encode(povm):
    return [[[float(z.real), float(z.imag)] for z in e.reshape(-1)] for e in povm]


def fixture(seed=20240917, count=16):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        m = 2 if i % 4 < 2 else 3
        if i % 2 == 0:
            povms = [random_unsharp_projective(rng, rng.uniform(0.7, 1.0)) for _ in range(m)]
        else:
            povms = [random_general(rng, 3) for _ in range(m)]
        out.append({"povms": [encode(p) for p in povms], "robustness": robustness(povms), "weight": weight(povms)})
    return out


if __name__ == "__main__":
    if "--fixture" in sys.argv:
        path = pathlib.Path(__file__).with_name("povm_fixture.json")
        path.write_text(json.dumps({"instances": fixture()}, indent=1) + "\n")
        print(f"wrote {path}")
    cases = {
        "xz_sharp": [sharp("x"), sharp("z")],
        "xyz_sharp": [sharp("x"), sharp("y"), sharp("z")],
        "xz_eta08": [unsharp("x", 0.8), unsharp("z", 0.8)],
        "xz_eta06": [unsharp("x", 0.6), unsharp("z", 0.6)],
    }
    for name, povms in cases.items():
        print(f"{name}: R = {robustness(povms):.12f}  W = {weight(povms):.12f}")
