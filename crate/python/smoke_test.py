"""Smoke test for the `randpur` extension module.

Build and install first, e.g. `maturin develop --release -m crates/py/Cargo.toml`.
"""

import json
import sys
from fractions import Fraction

import numpy as np

import randpur


def trace_norm(a):
    return np.abs(np.linalg.eigvalsh(a)).sum()


def random_state(d, rng):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def main():
    rng = np.random.default_rng(5)
    print("randpur", randpur.__version__, "record format", randpur.RECORD_FORMAT)

    assert randpur.rep_dimension(4, 2) == 5
    assert randpur.rep_dimension(1, 6) == 32
    assert randpur.dimension_ratio(16, 2) == Fraction(17, 18)
    assert randpur.lower_bound_report(10, 0.05) == 425

    ch = randpur.PurificationChannel("permutation-d2-n3")
    assert sorted(ch.blocks()) == [(1, 4), (2, 2)]
    rho = random_state(ch.input_dim, rng)
    out = np.array(ch.apply(rho.tolist()))
    assert out.shape == (64, 64)
    assert abs(np.trace(out) - 1) < 1e-10
    for form in ("pinch", "sqrt"):
        alt = np.array(ch.explicit_form(rho.tolist(), form))
        assert 0.5 * trace_norm(out - alt) < 1e-9, form

    bell = np.zeros(4, complex)
    bell[0] = bell[3] = 2 ** -0.5
    lam, purity = randpur.gaussianity_residuals(2, bell.tolist())
    assert lam < 1e-10 and purity < 1e-10

    theta = 0.4
    o = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]], complex)
    sector = np.array(randpur.passive_unitary_sector(o.tolist(), 3))
    assert sector.shape == (4, 4)
    assert np.allclose(sector @ sector.conj().T, np.eye(4))
    assert len(randpur.fock_basis(2, 3)) == 4

    fch = randpur.FermionChannel(1, 2)
    sigma = np.diag([0.7, 0.3]).astype(complex)
    fout = np.array(fch.apply(np.kron(sigma, sigma).tolist()))
    assert abs(np.trace(fout) - 1) < 1e-10

    bch = randpur.BosonChannel(2, 2, 2)
    assert [s[1] for s in bch.sectors()] == [1, 4, 10]
    assert len(bch.apply([2.5, 3.0], truncation_tol=1e-2)) == 3

    try:
        randpur.FermionChannel(3, 2)
    except randpur.BudgetExceeded:
        pass
    else:
        raise AssertionError("expected BudgetExceeded")

    lines = randpur.run_suite("lower-bound", json.dumps({"m": [10], "eps": 0.05}))
    assert json.loads(lines[0])["estimates"]["n_lower"] == 425

    records = [json.loads(l) for l in randpur.run_suite("tomo", json.dumps({"trials": 200, "seed": 3}))]
    assert all(r["pass"] for r in records)

    overlaps = randpur.sample_overlaps(2, 4, 200, seed=9)
    print("mean overlap m=2 n=4:", np.mean(overlaps), "target", 5 / 6)
    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
