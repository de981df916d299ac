"""Batch front-end over the simulation modules.

Each named experiment reproduces one theory dataset (temporal-bound map, K3
maxima, K3 curves, lifetime gain curves, rotation-rate profiles, circuit
verification) and writes it as CSV or JSON. Every experiment also runs a set
of embedded sanity assertions on its own output; the process exits 0 only if
all of them pass, 1 on a failed assertion, 2 on bad parameters or an
unwritable output path.

Outputs are deterministic: for a fixed configuration and seed the emitted
file is byte-identical across runs and thread counts. CSV files start with a
single '#' provenance line naming the experiment and its parameters, followed
by a header row; floats are written with full round-trip precision, LF line
endings throughout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from .ancilla import AncillaCircuit, interferometer_signal, normalization_signal, \
    postselect_map, verify_pulse_sequences
from .lgi import correlator, k3_at, k3_curve, k3_max, k3max_surface, ttb_map
from .linalg import dagger, dist_upto_phase, rot
from .noise import NoiseConfig, NoCrossing, evolve_lindblad, evolve_lindblad_exact, \
    gain_curve, integrate_bloch, k3_bloch, noisy_correlator
from .superpose import DegenerateSuperposition, SuperpositionConfig, UnsupportedGeometry, \
    f_of_t, norm_factor_sq, planar, soe_profile, soe_span, superposed_unitary, \
    unnormalized_superposed

EXPERIMENTS = ("ttb-map", "k3-surface", "k3-curves", "lifetime-bloch",
               "lifetime-lindblad", "soe-profiles", "verify-circuits", "selftest")

DEFAULT_SEED = 12345
DEFAULT_GAMMA = 1.0 / (4.0 * np.pi)

_DEFAULT_FORMATS = {"verify-circuits": "json", "selftest": "json"}


@dataclass(frozen=True)
class RunConfig:
    """One resolved invocation: experiment name plus parameter overrides.

    alpha is in radians, phi in degrees (converted at the dispatch boundary),
    grid is a per-experiment density knob with per-experiment defaults.
    """

    experiment: str
    alpha: float | None = None
    phi: float | None = None
    gamma: float | None = None
    omega: float = 1.0
    grid: int | None = None
    out: str | None = None
    format: str | None = None
    seed: int = DEFAULT_SEED
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.format not in (None, "csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.format!r}")
        if self.grid is not None and self.grid < 2:
            raise ValueError(f"grid must be >= 2, got {self.grid!r}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads!r}")
        if not self.omega > 0.0:
            raise ValueError(f"omega must be positive, got {self.omega!r}")


@dataclass(frozen=True)
class Check:
    """One embedded assertion outcome."""

    name: str
    passed: bool
    detail: str = ""


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _cell_csv(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _cell_json(v):
    if v is None or isinstance(v, (str, bool)):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def emit_series(name: str, columns, rows, fmt: str, path: str, meta: dict) -> None:
    """Write one rectangular dataset deterministically.

    CSV: '#' provenance line (experiment name and sorted parameters), header
    row, minimal RFC-4180 quoting, LF endings. JSON: {"meta", "columns",
    "rows"} with sorted keys. Both are byte-stable for identical inputs.
    """
    if fmt == "csv":
        buf = io.StringIO()
        provenance = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(meta.items()))
        buf.write(f"# lgsim {name} {provenance}".rstrip() + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list(columns))
        for row in rows:
            writer.writerow([_cell_csv(v) for v in row])
        data = buf.getvalue()
    elif fmt == "json":
        doc = {"meta": {"name": name, **meta}, "columns": list(columns),
               "rows": [[_cell_json(v) for v in row] for row in rows]}
        data = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(data)


# --- experiment runners ------------------------------------------------------
# Each returns (columns, rows, meta, checks).

def _run_ttb_map(config: RunConfig):
    n = config.grid or 50
    eta = np.linspace(0.0, np.pi, n + 1)
    xi = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    tm = ttb_map(eta, xi, omega=config.omega, threads=config.threads)
    rows = [(float(eta[i]), float(xi[j]), float(tm.k3max[i, j]), float(tm.argmax_omega_t[i, j]))
            for i in range(len(eta)) for j in range(len(xi))]
    peak = float(tm.k3max.max())
    analytic = 1.0 + 0.5 * np.sin(eta) ** 2
    dev = float(np.abs(tm.k3max - analytic[:, None]).max())
    checks = [
        Check("peak equals the single-rotation bound 1.5", abs(peak - 1.5) < 1e-6,
              f"max = {peak!r}"),
        Check("no entry exceeds the bound", peak <= 1.5 + 1e-9, f"max = {peak!r}"),
        Check("matches the azimuth-independent closed form", dev < 1e-6,
              f"max deviation = {dev:.3e}"),
    ]
    meta = {"alpha": 0.0, "omega": config.omega, "eta_points": n + 1, "xi_points": n}
    return ["eta", "xi", "k3max", "argmax_omega_t"], rows, meta, checks


def _run_k3_surface(config: RunConfig):
    n = config.grid or 50
    alphas = np.linspace(0.0, np.pi / 4, n + 1)
    phis = np.linspace(0.0, np.pi, n, endpoint=False)
    surf = k3max_surface(alphas, phis, omega=config.omega, threads=config.threads)
    rows = [(float(alphas[i]), float(phis[j]), float(surf.k3max[i, j]))
            for i in range(len(alphas)) for j in range(len(phis))]
    zero_row_dev = float(np.abs(surf.k3max[0] - 1.5).max())
    peak = float(surf.k3max.max())
    checks = [
        Check("no superposition recovers the single-rotation bound",
              zero_row_dev < 1e-6, f"max |k3max - 1.5| on the alpha=0 row = {zero_row_dev:.3e}"),
        Check("every maximum stays below the algebraic bound 3",
              peak < 3.0, f"max = {peak!r}"),
    ]
    if n % 2 == 0:
        anchor = float(surf.k3max[-1, n // 2])
        checks.append(Check("equal-weight orthogonal-axes maximum", abs(anchor - 1.846637) < 5e-5,
                            f"k3max(alpha=pi/4, phi=90deg) = {anchor!r}"))
    meta = {"omega": config.omega, "alpha_points": n + 1, "phi_points": n}
    return ["alpha", "phi", "k3max"], rows, meta, checks


def _run_k3_curves(config: RunConfig):
    n = config.grid or 2000
    us = np.linspace(0.0, 2.0 * np.pi, n + 1)
    alpha = np.pi / 4 if config.alpha is None else config.alpha
    phis_deg = [90.0, 135.0, 160.0] if config.phi is None else [config.phi]
    columns = ["omega_t"]
    series = []
    checks = []
    for pd in phis_deg:
        curve = k3_curve(planar(alpha, np.deg2rad(pd), config.omega), us)
        label = f"{pd:g}"
        if len(phis_deg) == 1:
            columns += [f"c12_phi{label}", f"c13_phi{label}"]
            series += [curve.c12, curve.c13]
        columns.append(f"k3_phi{label}")
        series.append(curve.k3)
        start_err = abs(float(curve.k3[0]) - 1.0)
        sym_err = float(np.abs(curve.k3 - curve.k3[::-1]).max())
        checks.append(Check(f"K3 starts at 1 (phi = {label} deg)", start_err < 1e-9,
                            f"|K3(0) - 1| = {start_err:.3e}"))
        checks.append(Check(f"K3 symmetric about omega*t = pi (phi = {label} deg)",
                            sym_err < 1e-9, f"max asymmetry = {sym_err:.3e}"))
        if abs(alpha - np.pi / 4) < 1e-12 and abs(pd - 160.0) < 1e-9:
            peak = float(curve.k3.max())
            checks.append(Check("equal-weight 160-degree peak", abs(peak - 2.883110) < 0.01,
                                f"max K3 = {peak!r}"))
    rows = [tuple([float(us[i])] + [float(s[i]) for s in series]) for i in range(len(us))]
    meta = {"alpha": alpha, "omega": config.omega, "points": n + 1,
            "phi_deg": ",".join(f"{p:g}" for p in phis_deg)}
    return columns, rows, meta, checks


def _run_lifetime(config: RunConfig, model: str):
    gamma = DEFAULT_GAMMA if config.gamma is None else config.gamma
    noise = NoiseConfig(gamma=gamma)
    n = config.grid or 4
    alphas = np.linspace(0.0, np.pi / 4, n + 1)
    phis_deg = [90.0, 115.0, 140.0] if config.phi is None else [config.phi]
    rows = []
    checks = []
    for pd in phis_deg:
        points = gain_curve(np.deg2rad(pd), noise, alphas, model=model,
                            omega=config.omega, threads=config.threads)
        rows += [(float(pd), p.alpha, p.tau_alpha, p.gain, p.status) for p in points]
        label = f"{pd:g}"
        ok = all(p.status == "ok" for p in points)
        checks.append(Check(f"every scan found a crossing (phi = {label} deg)", ok,
                            f"{sum(p.status == 'ok' for p in points)}/{len(points)} ok"))
        if not ok:
            continue
        gains = [p.gain for p in points]
        checks.append(Check(f"no-superposition gain is 1 (phi = {label} deg)",
                            gains[0] == 1.0, f"gain(alpha=0) = {gains[0]!r}"))
        diffs = np.diff(gains)
        if model == "bloch":
            checks.append(Check(f"gain never drops with alpha (phi = {label} deg)",
                                bool(np.all(diffs >= -1e-6)), f"min step = {diffs.min():.3e}"))
            if abs(pd - 115.0) < 1e-9:
                checks.append(Check("gain strictly increases at 115 degrees",
                                    bool(np.all(diffs > 0.0)), f"min step = {diffs.min():.3e}"))
        else:
            worst = min(gains)
            checks.append(Check(f"dephasing on both qubits never hurts (phi = {label} deg)",
                                worst >= 1.0 - 1e-6, f"min gain = {worst!r}"))
            checks.append(Check(f"full superposition still gains (phi = {label} deg)",
                                gains[-1] > 1.0, f"gain(alpha=pi/4) = {gains[-1]!r}"))
    meta = {"model": model, "gamma": gamma, "omega": config.omega,
            "alpha_points": n + 1, "phi_deg": ",".join(f"{p:g}" for p in phis_deg)}
    return ["phi_deg", "alpha", "tau_alpha", "gain", "status"], rows, meta, checks


def _run_soe_profiles(config: RunConfig):
    pd = 135.0 if config.phi is None else config.phi
    phi = np.deg2rad(pd)
    n = config.grid or 2000
    us = np.linspace(0.0, 2.0 * np.pi, n + 1)
    ts = us / config.omega
    alphas = [0.0, np.pi / 8, np.pi / 4] if config.alpha is None else [config.alpha]
    columns = ["omega_t"]
    series = []
    checks = []
    for a in alphas:
        prof = soe_profile(planar(a, phi, config.omega))
        f_vals = np.asarray(prof.f(ts), dtype=float)
        g_vals = np.asarray(prof.g(ts), dtype=float)
        label = f"{a:.4f}"
        columns += [f"f_alpha{label}", f"g_alpha{label}"]
        series += [f_vals, g_vals]
        if a == 0.0:
            flat = float(np.abs(g_vals - config.omega).max())
            linear = float(np.abs(f_vals - us).max())
            checks.append(Check("no superposition means a constant rate",
                                flat < 1e-12 and linear < 1e-9,
                                f"max |g - omega| = {flat:.3e}, max |f - omega*t| = {linear:.3e}"))
        dt = ts[1] - ts[0]
        fd = (f_vals[2:] - f_vals[:-2]) / (2.0 * dt)
        rel = float(np.abs(fd - g_vals[1:-1]).max() / g_vals.min())
        checks.append(Check(f"rate is the derivative of the accumulated angle (alpha = {a:.4f})",
                            rel < 1e-4, f"max relative FD mismatch = {rel:.3e}"))
    span_grid = np.linspace(0.0, np.pi / 4, 9)
    spans = [soe_span(planar(a, phi, config.omega)) for a in span_grid]
    span_diffs = np.diff(spans)
    checks.append(Check("rate modulation depth grows with the superposition weight",
                        bool(np.all(span_diffs >= -1e-12)), f"min step = {span_diffs.min():.3e}"))
    rows = [tuple([float(us[i])] + [float(s[i]) for s in series]) for i in range(len(us))]
    meta = {"phi_deg": pd, "omega": config.omega, "points": n + 1,
            "alphas": ",".join(f"{a:.4f}" for a in alphas)}
    return columns, rows, meta, checks


def _run_verify_circuits(config: RunConfig):
    n = config.grid or 21
    phis = np.linspace(0.0, np.pi, n + 2)[1:-1]
    omega_ts = np.linspace(0.0, 2.0 * np.pi, n)
    report = verify_pulse_sequences(phis, omega_ts)
    print(report.summary())
    rows = [(r.name, r.phi, r.omega_t, r.distance) for r in report.rows]
    checks = [Check("all pulse sequences realize their gates", report.passed,
                    f"tolerance = {report.tolerance!r}")]
    meta = {"tolerance": report.tolerance, "phi_points": n, "omega_t_points": n}
    for name, dist in sorted(report.max_distance().items()):
        checks.append(Check(f"{name} within tolerance", dist < report.tolerance,
                            f"max distance = {dist:.3e}"))
        meta[f"max_dist_{name}"] = dist
    return ["sequence", "phi", "omega_t", "distance"], rows, meta, checks


def _run_selftest(config: RunConfig):
    rng = np.random.default_rng(config.seed)
    omega = config.omega
    checks = []

    def random_axis():
        v = rng.normal(size=3)
        return v / np.linalg.norm(v)

    def random_cfg():
        while True:
            n_axis, m_axis = random_axis(), random_axis()
            if float(n_axis @ m_axis) > -0.99:
                return SuperpositionConfig(alpha=rng.uniform(0.0, np.pi / 2),
                                           n_axis=n_axis, m_axis=m_axis, omega=omega)

    def random_planar():
        return planar(rng.uniform(0.0, np.pi / 2), rng.uniform(0.05, np.pi - 0.05), omega)

    def random_rho():
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        rho = a @ dagger(a)
        return rho / np.trace(rho).real

    worst = max(dist_upto_phase(rot(ax, a) @ rot(ax, b), rot(ax, a + b))
                for ax, a, b in ((random_axis(), rng.uniform(-6, 6), rng.uniform(-6, 6))
                                 for _ in range(10)))
    checks.append(Check("rotations about one axis compose", worst < 1e-12, f"max = {worst:.3e}"))

    worst = 0.0
    for _ in range(20):
        cfg = random_cfg()
        delta = rng.uniform(0.0, 6.0)
        ut = unnormalized_superposed(cfg, delta)
        direct = 0.5 * np.trace(ut @ dagger(ut)).real
        worst = max(worst, abs(float(norm_factor_sq(cfg, delta)) - direct))
    checks.append(Check("norm factor matches the trace definition", worst < 1e-12,
                        f"max = {worst:.3e}"))

    worst, spread = 0.0, 0.0
    for _ in range(10):
        cfg = random_planar()
        delta = rng.uniform(0.1, 5.0)
        u = superposed_unitary(cfg, delta)
        probs = []
        for _ in range(3):
            rho = random_rho()
            out, prob = postselect_map(cfg, rho, 0.0, delta)
            worst = max(worst, float(np.abs(out - u @ rho @ dagger(u)).max()))
            probs.append(prob)
        spread = max(spread, max(probs) - min(probs))
    checks.append(Check("post-selected channel equals the normalized conjugation",
                        worst < 1e-10, f"max = {worst:.3e}"))
    checks.append(Check("post-selection probability is state-independent",
                        spread < 1e-12, f"max spread = {spread:.3e}"))

    worst_id, worst_corr = 0.0, 0.0
    for _ in range(10):
        cfg = random_planar()
        delta = rng.uniform(0.1, 5.0)
        sig = interferometer_signal(AncillaCircuit(cfg, 0.0, delta))
        norm = normalization_signal(AncillaCircuit(cfg, 0.0, delta, include_q_controls=False))
        worst_id = max(worst_id, abs(sig.re_cm - 0.25 * (sig.t_plus + sig.t_minus)))
        worst_corr = max(worst_corr, abs(sig.t_plus / norm.n_plus - correlator(cfg, 0.0, delta)))
    checks.append(Check("interferometer coherence identity", worst_id < 1e-10,
                        f"max = {worst_id:.3e}"))
    checks.append(Check("normalized coherence reproduces the correlator",
                        worst_corr < 1e-10, f"max = {worst_corr:.3e}"))

    quiet = NoiseConfig(gamma=0.0)
    cfg = planar(np.pi / 8, np.deg2rad(135.0), omega)
    worst = 0.0
    for t in (0.4 / omega, 1.1 / omega):
        exact = k3_at(cfg, t).k3
        bloch = k3_bloch(cfg, quiet, t)
        joint = (2.0 * noisy_correlator(cfg, quiet, 0.0, t)
                 - noisy_correlator(cfg, quiet, 0.0, 2.0 * t))
        worst = max(worst, abs(bloch - exact), abs(joint - exact))
    checks.append(Check("all three noiseless routes agree on K3", worst < 1e-6,
                        f"max = {worst:.3e}"))

    noisy = NoiseConfig(gamma=DEFAULT_GAMMA)
    cfg = planar(np.pi / 4, np.deg2rad(115.0), omega)
    anc = np.array([np.sin(cfg.alpha), np.cos(cfg.alpha)])
    rho0 = np.kron(np.outer(anc, anc), np.diag([1.0, 0.0])).astype(complex)
    worst = max(float(np.abs(evolve_lindblad(rho0, cfg, noisy, t)
                             - evolve_lindblad_exact(rho0, cfg, noisy, t)).max())
                for t in (0.37 / omega, 1.9 / omega, 3.3 / omega))
    checks.append(Check("fixed-step propagation matches the exact exponential",
                        worst < 1e-8, f"max = {worst:.3e}"))

    report = verify_pulse_sequences(np.linspace(0.3, np.pi - 0.3, 5),
                                    np.linspace(0.0, 2.0 * np.pi, 5))
    checks.append(Check("pulse sequences verify on a spot grid", report.passed,
                        f"max = {max(report.max_distance().values()):.3e}"))

    worst = 0.0
    for _ in range(15):
        cfg = random_planar()
        t = rng.uniform(0.0, 12.0)
        worst = max(worst, abs(float(np.cos(f_of_t(cfg, t))) - correlator(cfg, 0.0, t)))
    checks.append(Check("accumulated angle reproduces the correlator", worst < 1e-10,
                        f"max = {worst:.3e}"))

    cfg = planar(np.pi / 4, np.deg2rad(135.0), omega)
    v_default, _ = k3_max(cfg)
    v_dense, _ = k3_max(cfg, omega_t_grid=np.linspace(0.0, 2.0 * np.pi, 20001))
    delta = abs(v_default - v_dense)
    checks.append(Check("K3 maximum is scan-grid independent", delta < 1e-9,
                        f"|difference| = {delta:.3e}"))

    traj = integrate_bloch(planar(np.pi / 8, 2.0, omega), NoiseConfig(gamma=0.05), 6.0 / omega)
    samples = np.linspace(0.0, 6.0 / omega, 31)
    norms = np.array([np.linalg.norm(traj(t)) for t in samples])
    shrinks = bool(np.all(np.diff(norms) <= 1e-8)) and bool(np.all(norms <= 1.0 + 1e-8))
    quiet_traj = integrate_bloch(planar(np.pi / 8, 2.0, omega), quiet, 6.0 / omega)
    quiet_dev = max(abs(np.linalg.norm(quiet_traj(t)) - 1.0) for t in samples)
    checks.append(Check("Bloch norm never grows under dephasing", shrinks,
                        f"max norm = {float(norms.max())!r}"))
    checks.append(Check("Bloch norm is conserved without dephasing", quiet_dev < 1e-8,
                        f"max deviation = {quiet_dev:.3e}"))

    rows = [(c.name, c.passed, c.detail) for c in checks]
    meta = {"seed": config.seed, "omega": omega}
    return ["check", "passed", "detail"], rows, meta, checks


_RUNNERS = {
    "ttb-map": _run_ttb_map,
    "k3-surface": _run_k3_surface,
    "k3-curves": _run_k3_curves,
    "lifetime-bloch": lambda c: _run_lifetime(c, "bloch"),
    "lifetime-lindblad": lambda c: _run_lifetime(c, "lindblad"),
    "soe-profiles": _run_soe_profiles,
    "verify-circuits": _run_verify_circuits,
    "selftest": _run_selftest,
}


def run(config: RunConfig) -> int:
    """Execute one experiment; return the process exit code."""
    try:
        columns, rows, meta, checks = _RUNNERS[config.experiment](config)
    except (DegenerateSuperposition, UnsupportedGeometry, NoCrossing, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    fmt = config.format or _DEFAULT_FORMATS.get(config.experiment, "csv")
    out = config.out or f"lgsim-{config.experiment}.{fmt}"
    try:
        emit_series(config.experiment, columns, rows, fmt, out, meta)
    except OSError as exc:
        print(f"error: cannot write {out!r}: {exc}", file=sys.stderr)
        return 2
    failed = 0
    for check in checks:
        tag = "PASS" if check.passed else "FAIL"
        detail = f" ({check.detail})" if check.detail else ""
        print(f"{tag} {config.experiment}: {check.name}{detail}")
        failed += 0 if check.passed else 1
    print(f"wrote {out}: {len(rows)} rows, {len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lgsim",
        description="Three-time correlator and decoherence datasets for superposed rotations.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--alpha", type=float, default=None,
                        help="superposition weight in radians (default per experiment)")
    parser.add_argument("--phi", type=float, default=None,
                        help="angle between the two rotation axes, in degrees")
    parser.add_argument("--gamma", type=float, default=None,
                        help="dephasing rate (default 1/(4 pi) for lifetime experiments)")
    parser.add_argument("--omega", type=float, default=1.0, help="rotation rate")
    parser.add_argument("--grid", type=int, default=None,
                        help="grid density (cells for maps, intervals for curves)")
    parser.add_argument("--out", default=None, help="output path (default lgsim-<experiment>.<ext>)")
    parser.add_argument("--format", choices=("csv", "json"), default=None,
                        help="output format (default csv; json for reports)")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help="seed for the randomized self-test draws")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default $LGSIM_THREADS or 1)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is None:
        args.threads = int(os.environ.get("LGSIM_THREADS", "1"))
    try:
        config = RunConfig(experiment=args.experiment, alpha=args.alpha, phi=args.phi,
                           gamma=args.gamma, omega=args.omega, grid=args.grid,
                           out=args.out, format=args.format, seed=args.seed,
                           threads=args.threads)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
