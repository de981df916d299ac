"""Dephasing models: damped Bloch dynamics, the joint master equation, and
the lifetime of the K3 > 1 violation."""

import numpy as np
import pytest
from scipy.linalg import expm

from lgsim.ancilla import PROJ0, PROJ1, PostSelectionStarved, ancilla_state, controlled_u_t0, controlled_u_t1
from lgsim.lgi import correlator, k3_at
from lgsim.linalg import ID2, SIGMA_Z, dagger, is_density_matrix, kron
from lgsim.noise import (
    DEFAULT_ALPHA_GRID,
    NoCrossing,
    NoiseConfig,
    SolverDiverged,
    bloch_rhs,
    default_step,
    evolve_lindblad,
    evolve_lindblad_exact,
    gain_curve,
    hamiltonian_as,
    integrate_bloch,
    k3_bloch,
    lifetime,
    lindblad_rhs,
    liouvillian,
    noisy_correlator,
)
from lgsim.superpose import axis_theta, f_of_t, planar

GAMMA_REF = 1.0 / (4.0 * np.pi)

# ODE + bisection oracle values at gamma = 1/(4 pi), alpha = pi/4, phi = 115 deg
BLOCH_TAU = 1.9092059326
BLOCH_TAU0 = 1.5487896729
BLOCH_GAIN = 1.2327083310
LINDBLAD_TAU = 1.8733575439
LINDBLAD_GAIN = 1.2095622645


def _random_joint_density(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def test_noise_config_validation():
    with pytest.raises(ValueError):
        NoiseConfig(gamma=-0.1)
    with pytest.raises(ValueError):
        NoiseConfig(gamma=np.inf)
    with pytest.raises(ValueError):
        NoiseConfig(gamma=0.1, solver="euler")
    with pytest.raises(ValueError):
        NoiseConfig(gamma=0.1, step=0.0)
    with pytest.raises(ValueError):
        NoiseConfig(gamma=0.1, tol=0.0)
    assert NoiseConfig(gamma=0.1).resolved_solver("rk4_fixed") == "rk4_fixed"
    assert NoiseConfig(gamma=0.1, solver="rk45_adaptive").resolved_solver("rk4_fixed") \
        == "rk45_adaptive"


def test_default_step_resolves_both_scales():
    assert np.isclose(default_step(planar(0.3, 1.0, omega=2.0), NoiseConfig(gamma=0.0)), 0.005)
    assert np.isclose(default_step(planar(0.3, 1.0), NoiseConfig(gamma=5.0)), 0.002)


def test_poles_are_untouched_by_damping():
    cfg = planar(np.pi / 8, 1.3)
    pole = np.array([0.0, 0.0, 1.0])
    quiet = bloch_rhs(pole, 0.7, cfg, NoiseConfig(gamma=0.0))
    noisy = bloch_rhs(pole, 0.7, cfg, NoiseConfig(gamma=5.0))
    assert np.allclose(quiet, noisy)
    # transverse components are damped straight toward the axis
    flat = np.array([1.0, 1.0, 0.0])
    diff = bloch_rhs(flat, 0.7, cfg, NoiseConfig(gamma=2.0)) \
        - bloch_rhs(flat, 0.7, cfg, NoiseConfig(gamma=0.0))
    assert np.allclose(diff, -2.0 * flat)


def test_noiseless_bloch_matches_algebraic_rotation():
    # gamma = 0: the trajectory is a rigid rotation of the start vector
    cfg = planar(np.pi / 4, 2.0)
    traj = integrate_bloch(cfg, NoiseConfig(gamma=0.0), 8.0)
    theta = axis_theta(cfg)
    axis = np.array([np.cos(theta), np.sin(theta), 0.0])
    z = np.array([0.0, 0.0, 1.0])
    for t in (0.0, 0.9, 2.7, 5.5, 8.0):
        f = f_of_t(cfg, t)
        expect = np.cos(f) * z + np.sin(f) * np.cross(axis, z)
        assert np.allclose(traj(t), expect, atol=1e-8)


def test_bloch_norm_behavior():
    cfg = planar(np.pi / 8, 1.0)
    quiet = integrate_bloch(cfg, NoiseConfig(gamma=0.0), 10.0)
    ts = np.linspace(0.0, 10.0, 60)
    norms = np.array([np.linalg.norm(quiet(t)) for t in ts])
    assert np.allclose(norms, 1.0, atol=1e-8)
    damped = integrate_bloch(cfg, NoiseConfig(gamma=0.3), 10.0)
    norms = np.array([np.linalg.norm(damped(t)) for t in ts])
    assert np.all(np.diff(norms) < 1e-8)


def test_bloch_solvers_agree():
    cfg = planar(np.pi / 4, 2.4)
    fixed = integrate_bloch(cfg, NoiseConfig(gamma=0.2, solver="rk4_fixed"), 6.0)
    adaptive = integrate_bloch(cfg, NoiseConfig(gamma=0.2, solver="rk45_adaptive"), 6.0)
    for t in (0.5, 2.2, 4.8, 6.0):
        assert np.allclose(fixed(t), adaptive(t), atol=1e-6)


def test_trajectory_domain_guard():
    traj = integrate_bloch(planar(0.2, 1.0), NoiseConfig(gamma=0.1), 2.0)
    with pytest.raises(ValueError):
        traj(2.5)
    with pytest.raises(ValueError):
        integrate_bloch(planar(0.2, 1.0), NoiseConfig(gamma=0.1), 0.0)


def test_k3_bloch_limits():
    cfg = planar(np.pi / 4, 2.0)
    assert k3_bloch(cfg, NoiseConfig(gamma=0.5), 0.0) == 1.0
    with pytest.raises(ValueError):
        k3_bloch(cfg, NoiseConfig(gamma=0.5), -1.0)
    # gamma = 0 reduces to the algebraic K3
    for t in (0.4, 1.1, 2.7):
        assert np.isclose(k3_bloch(cfg, NoiseConfig(gamma=0.0), t),
                          k3_at(cfg, t).k3, atol=1e-6)


def test_joint_hamiltonian_generates_the_controlled_gates():
    # exp(-i H t) against the product of the two controlled evolutions
    cfg = planar(0.6, 2.1, omega=1.3)
    h = hamiltonian_as(cfg)
    assert np.allclose(h, dagger(h))
    for delta in (0.0, 0.8, 2.9):
        direct = expm(-1j * h * delta)
        gates = controlled_u_t1(cfg, 0.0, delta) @ controlled_u_t0(cfg, 0.0, delta)
        assert np.allclose(direct, gates, atol=1e-10)


def test_lindblad_rhs_structure():
    rng = np.random.default_rng(12)
    cfg = planar(np.pi / 4, 1.9)
    noise = NoiseConfig(gamma=0.4)
    rho = _random_joint_density(rng)
    out = lindblad_rhs(rho, cfg, noise)
    assert np.isclose(np.trace(out), 0.0, atol=1e-12)      # trace preserving
    assert np.allclose(out, dagger(out), atol=1e-12)       # hermiticity preserving
    # the maximally mixed state is stationary
    assert np.allclose(lindblad_rhs(np.eye(4) / 4.0, cfg, noise), 0.0, atol=1e-14)


def test_liouvillian_matches_rhs():
    rng = np.random.default_rng(44)
    cfg = planar(0.5, 2.2)
    noise = NoiseConfig(gamma=0.3)
    lv = liouvillian(cfg, noise)
    for _ in range(5):
        rho = _random_joint_density(rng)
        assert np.allclose(lv @ rho.ravel(), lindblad_rhs(rho, cfg, noise).ravel(),
                           atol=1e-12)


def test_lindblad_against_exact_exponential():
    # fixed-step integration against the superoperator-exponential oracle
    rng = np.random.default_rng(77)
    cfg = planar(np.pi / 4, 2.0)
    noise = NoiseConfig(gamma=0.25)
    for _ in range(5):
        rho0 = _random_joint_density(rng)
        t = rng.uniform(0.3, 3.0)
        stepped = evolve_lindblad(rho0, cfg, noise, t)
        exact = evolve_lindblad_exact(rho0, cfg, noise, t)
        assert np.allclose(stepped, exact, atol=1e-8)
        assert is_density_matrix(stepped, tol=1e-9)
        assert np.isclose(np.trace(stepped).real, 1.0, atol=1e-10)


def test_lindblad_solvers_agree():
    rng = np.random.default_rng(13)
    cfg = planar(0.7, 1.1)
    rho0 = _random_joint_density(rng)
    fixed = evolve_lindblad(rho0, cfg, NoiseConfig(gamma=0.2, solver="rk4_fixed"), 2.0)
    adaptive = evolve_lindblad(rho0, cfg, NoiseConfig(gamma=0.2, solver="rk45_adaptive"), 2.0)
    assert np.allclose(fixed, adaptive, atol=1e-7)


def test_lindblad_input_validation():
    cfg = planar(0.3, 1.0)
    noise = NoiseConfig(gamma=0.1)
    rho = kron(PROJ0, PROJ0)
    assert np.allclose(evolve_lindblad(rho, cfg, noise, 0.0), rho)
    with pytest.raises(ValueError):
        evolve_lindblad(rho, cfg, noise, -0.5)
    with pytest.raises(ValueError):
        evolve_lindblad(np.eye(4), cfg, noise, 1.0)  # trace 4


def test_dephasing_degrades_purity():
    cfg = planar(np.pi / 4, np.pi / 2)
    noise = NoiseConfig(gamma=0.5)
    anc = ancilla_state(cfg.alpha)
    plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
    rho0 = kron(np.outer(anc, anc.conj()), np.outer(plus, plus.conj()))
    purities = [np.trace(np.linalg.matrix_power(
        evolve_lindblad(rho0, cfg, noise, t), 2)).real for t in (0.0, 0.5, 1.0, 2.0)]
    assert np.all(np.diff(purities) < 0)


def test_noisy_correlator_reduces_to_unitary_one():
    cfg = planar(np.pi / 4, 3 * np.pi / 4)
    quiet = NoiseConfig(gamma=0.0)
    for t in (0.4, 1.2, 2.8):
        for mode in ("per_branch", "global"):
            assert np.isclose(noisy_correlator(cfg, quiet, 0.0, t, mode=mode),
                              correlator(cfg, 0.0, t), atol=1e-8)


def test_noisy_correlator_validation_and_bounds():
    cfg = planar(np.pi / 8, 1.0)
    noise = NoiseConfig(gamma=0.3)
    with pytest.raises(ValueError):
        noisy_correlator(cfg, noise, 1.0, 0.5)
    with pytest.raises(ValueError):
        noisy_correlator(cfg, noise, 0.0, 1.0, mode="other")
    for t in (0.3, 1.5, 3.0):
        c = noisy_correlator(cfg, noise, 0.0, t)
        assert -1.0 - 1e-9 <= c <= 1.0 + 1e-9


def test_lindblad_k3_reduces_to_algebraic_at_zero_noise():
    cfg = planar(np.pi / 4, 2.0)
    quiet = NoiseConfig(gamma=0.0)
    for t in (0.4, 1.1, 2.7):
        k3 = 2.0 * noisy_correlator(cfg, quiet, 0.0, t) \
            - noisy_correlator(cfg, quiet, 0.0, 2.0 * t)
        assert np.isclose(k3, k3_at(cfg, t).k3, atol=1e-6)


def test_lifetime_requires_noise():
    with pytest.raises(ValueError):
        lifetime(planar(0.3, 1.0), NoiseConfig(gamma=0.0))


def test_lifetime_without_superposition_has_unit_gain():
    res = lifetime(planar(0.0, 2.0), NoiseConfig(gamma=GAMMA_REF))
    assert res.gain == 1.0
    assert res.tau_alpha == res.tau_0
    lo, hi = res.crossing_bracket
    assert lo <= res.tau_alpha <= hi


def test_lifetime_bloch_anchor():
    res = lifetime(planar(np.pi / 4, np.deg2rad(115.0)), NoiseConfig(gamma=GAMMA_REF))
    assert np.isclose(res.tau_alpha, BLOCH_TAU, atol=1e-8)
    assert np.isclose(res.tau_0, BLOCH_TAU0, atol=1e-8)
    assert np.isclose(res.gain, BLOCH_GAIN, atol=1e-8)


def test_lifetime_lindblad_anchor():
    res = lifetime(planar(np.pi / 4, np.deg2rad(115.0)), NoiseConfig(gamma=GAMMA_REF),
                   model="lindblad")
    assert np.isclose(res.tau_alpha, LINDBLAD_TAU, atol=1e-8)
    assert np.isclose(res.gain, LINDBLAD_GAIN, atol=1e-8)


def test_lifetime_reference_shortcut():
    cfg = planar(np.pi / 4, np.deg2rad(115.0))
    noise = NoiseConfig(gamma=GAMMA_REF)
    res = lifetime(cfg, noise, tau_ref=BLOCH_TAU0)
    assert np.isclose(res.gain, BLOCH_TAU / BLOCH_TAU0, atol=1e-6)
    assert res.tau_0 == BLOCH_TAU0


def test_lifetime_rejects_unknown_model():
    with pytest.raises(ValueError):
        lifetime(planar(0.3, 1.0), NoiseConfig(gamma=0.1), model="exact")


def test_no_crossing_when_horizon_precedes_first_scan_point():
    # damping so fast that the 50/gamma horizon is shorter than one scan step
    with pytest.raises(NoCrossing):
        lifetime(planar(0.0, 1.0), NoiseConfig(gamma=1e4), model="lindblad")


def test_gain_curve_shape_and_determinism():
    noise = NoiseConfig(gamma=GAMMA_REF)
    alphas = (0.0, np.pi / 4)
    pts = gain_curve(np.deg2rad(115.0), noise, alpha_grid=alphas)
    assert [p.status for p in pts] == ["ok", "ok"]
    assert pts[0].gain == 1.0
    assert np.isclose(pts[1].gain, BLOCH_GAIN, atol=1e-8)
    threaded = gain_curve(np.deg2rad(115.0), noise, alpha_grid=alphas, threads=2)
    assert [(p.alpha, p.tau_alpha, p.gain) for p in pts] \
        == [(p.alpha, p.tau_alpha, p.gain) for p in threaded]


def test_gain_curve_default_grid():
    assert len(DEFAULT_ALPHA_GRID) == 5
    assert DEFAULT_ALPHA_GRID[0] == 0.0
    assert np.isclose(DEFAULT_ALPHA_GRID[-1], np.pi / 4)


def test_gain_curve_flags_no_crossing_rows(monkeypatch):
    import lgsim.noise as noise_mod

    def fake(cfg, noise, model="bloch", tau_ref=None):
        if cfg.alpha > 0.2:
            raise noise_mod.NoCrossing("synthetic")
        return noise_mod.LifetimeResult(tau_alpha=1.0, tau_0=1.0, gain=1.0,
                                        crossing_bracket=(0.9, 1.1))

    monkeypatch.setattr(noise_mod, "lifetime", fake)
    pts = noise_mod.gain_curve(np.pi / 2, NoiseConfig(gamma=0.1),
                               alpha_grid=(0.0, 0.4))
    assert [p.status for p in pts] == ["ok", "no-crossing"]
    assert pts[1].tau_alpha is None
    assert pts[1].gain is None
