"""Smoke tests for the _scdyn extension module."""

import json
import math
import sys

import _scdyn as sc


def approx(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def test_constants():
    p = sc.ModelParams(M=1.0, m=1.0, omega=1.0, lambda_=1.0, gamma=1.0, kT=1.0,
                       sigma=1.0, eta=0.5, duration=1.0, dt=1e-3)
    c = sc.derive_constants(p)
    assert approx(c.D, 2.0)
    assert approx(c.Dtilde, 2.25)
    assert approx(c.sigma1_sq, 4.5)
    rep = sc.validate(p)
    assert rep["decoherent"] is True


def test_wigner_and_sampling():
    state = sc.SuperpositionState(
        [(math.sqrt(0.3), 6.0, 0.0, 0.5, 0.0), (math.sqrt(0.7), -6.0, 0.0, 0.5, 0.0)])
    assert approx(state.norm(), 1.0, 1e-10)
    # raw Wigner of a balanced cat dips negative; vacuum value is 1/pi at a packet
    w0 = state.wigner(6.0, 0.0)
    assert w0 > 0.09
    p = sc.ModelParams(M=50.0, m=1.0, omega=1.0, lambda_=1.6, gamma=0.1, kT=0.2,
                       sigma=1.0, eta=0.5, duration=3.0, dt=5e-4)
    grid = sc.smeared_wigner_grid(state, p, -14.0, 14.0, -9.0, 9.0, 128)
    assert grid["min"] >= -1e-10
    samples = sc.sample_phase_space(state, p, 2000, 7, 128)
    frac = sum(1 for (q, _) in samples if q > 0) / len(samples)
    assert abs(frac - 0.3) < 5.0 * math.sqrt(0.3 * 0.7 / 2000)


def test_branch_and_determinism():
    p = sc.ModelParams(M=2.0, lambda_=0.0, duration=5.0, dt=1e-3)
    path = sc.integrate_branch(1.0, 3.0, 0.0, 0.0, p, seed=1, with_noise=False)
    assert approx(path["Q"][-1], 1.0 + 1.5 * 5.0, 1e-9)

    cfg = {
        "model": {"M": 50.0, "m": 1.0, "omega": 1.0, "lambda": 1.6, "gamma": 0.1,
                  "kT": 0.2, "sigma": 1.0, "eta": 0.5, "duration": 3.0, "dt": 5e-4},
        "state": {"packets": [
            {"amplitude": [math.sqrt(0.3), 0.0], "q0": 6.0, "s2": 0.5},
            {"amplitude": [math.sqrt(0.7), 0.0], "q0": -6.0, "s2": 0.5}]},
        "engine": "phase-space",
        "n_runs": 400,
        "seed": 11,
    }
    s1 = json.loads(sc.run_ensemble(json.dumps(cfg)))
    s2 = json.loads(sc.run_ensemble(json.dumps(cfg)))
    assert s1 == s2
    assert abs(s1["branch_fractions"][1] - 0.7) < 0.15


def test_energy_populations():
    p = sc.ModelParams()
    coherent = sc.SuperpositionState([(1.0, math.sqrt(2.0), 0.0, 0.5, 0.0)])
    pops = sc.energy_populations(coherent, p, 14)
    assert approx(pops[0][0], 0.5)          # E_0 = hbar w / 2
    assert abs(pops[0][1] - math.exp(-1.0)) < 1e-6


def main():
    test_constants()
    test_wigner_and_sampling()
    test_branch_and_determinism()
    test_energy_populations()
    print("python module smoke tests passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
