"""Run harness: simulate / verify / diagnose.

Config files are INI-style (sectioned key=value).  Reports are JSON, time
series are CSV.  Exit codes: 0 pass, 2 tolerance breach, 3 instability.
"""

import argparse
import configparser
import csv
import glob as globmod
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .solver import InstabilityError, SimConfig, Snapshot, load_snapshot, \
    run, save_snapshot

EXIT_OK = 0
EXIT_BREACH = 2
EXIT_INSTABILITY = 3


def _parse_config(path):
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    g = cp["grid"] if "grid" in cp else {}
    t = cp["time"] if "time" in cp else {}
    d = cp["data"] if "data" in cp else {}
    r = cp["run"] if "run" in cp else {}
    cfg = SimConfig(
        nx=int(g.get("nx", 16)), nv=int(g.get("nv", 16)),
        L=float(g.get("l", 16.0)), V=float(g.get("v", 2.0)),
        dt=float(t.get("dt", 0.1)), t_end=float(t.get("t_end", 10.0)),
        cadence=int(t.get("cadence", 5)),
        mass=int(r.get("mass", 1)), mode=r.get("mode", "coupled"),
        seed=int(r.get("seed", 0)),
        eps=float(d.get("eps", 1e-2)), sigx=float(d.get("sigx", 2.0)),
        sigv=float(d.get("sigv", 0.7)),
        v_center=float(d.get("v_center", 0.0)),
        phi_amp=float(d.get("phi_amp", 1.0)),
        phi_sig=float(d.get("phi_sig", 1.2)),
    )
    out = cp["output"].get("prefix", "rvn_out") if "output" in cp \
        else "rvn_out"
    return cfg, out


def _manifest(cfg, seed, outputs, wall, extra=None):
    d = {"version": __version__, "seed": seed, "outputs": outputs,
         "wall_clock_s": round(wall, 3),
         "config": {k: (v if not callable(v) else None)
                    for k, v in vars(cfg).items()} if cfg else None}
    if extra:
        d.update(extra)
    return d


# ---------------------------------------------------------------------------
# verify

def _perturbation():
    return float(os.environ.get("RVNLAB_PERTURB", "0") or 0.0)


def _suite_geometry(seed, samples, report):
    from .geometry import (PhasePoint, cone_factorization_residual,
                           dv_decomposition, dtilde_derivative,
                           first_order_commutator)
    from .geometry.tables import apply_word
    from .geometry.jets import jexp
    from . import oracle
    rng = np.random.default_rng(seed)
    pert = _perturbation()

    n = int(samples)
    x = rng.uniform(-10, 10, (n, 3))
    v = rng.uniform(-10, 10, (n, 3))
    t = rng.uniform(0, 10, n)
    q = (x ** 2).sum(-1) + ((x * v).sum(-1)) ** 2
    keep = q >= 1.5
    res = cone_factorization_residual(t, PhasePoint(x, v))
    rel = np.abs(res) / ((1 + t ** 2 + (x ** 2).sum(-1))
                         * (1 + (v ** 2).sum(-1)))
    report.add("geometry.factorization", float(rel[keep].max()), 1e-10)

    # D_v reconstruction against the FD oracle on a Gaussian
    a, b = rng.normal(size=3) * 0.3, rng.normal(size=3) * 0.3

    def hjet(tq, xs, vs):
        qq = 0.0
        for i in range(3):
            qq = qq + (xs[i] - a[i]) * (xs[i] - a[i]) * 0.5 \
                + (vs[i] - b[i]) * (vs[i] - b[i]) * 0.5
        return jexp(-qq)

    def hval(tq, xq, vq):
        return np.exp(-0.5 * ((xq - a) ** 2).sum(-1)
                      - 0.5 * ((vq - b) ** 2).sum(-1))

    m = min(200, max(20, n // 50))
    xs_s = rng.uniform(-2.5, 2.5, (m, 3))
    vs_s = rng.uniform(-2.5, 2.5, (m, 3))
    t0 = 1.7
    worst = 0.0
    for variant in ("first", "second"):
        pt = PhasePoint(xs_s, vs_s)
        tab = dv_decomposition(variant, t0, pt)
        xl = [xs_s[:, 0], xs_s[:, 1], xs_s[:, 2]]
        vl = [vs_s[:, 0], vs_s[:, 1], vs_s[:, 2]]
        recon = np.zeros((m, 3))
        for gen, coeff in tab.items():
            lam = np.asarray(apply_word((gen,), hjet, t0, xl, vl))
            recon += (1.0 + pert) * coeff * lam[:, None]
        ref = np.stack([
            [oracle.fd_vector_field(f"Dv{c + 1}", hval, t0, xs_s[i], vs_s[i])
             for c in range(3)] for i in range(m)])
        worst = max(worst, np.abs(recon - ref).max()
                    / max(np.abs(ref).max(), 1e-12))
    report.add("geometry.dv_reconstruction", float(worst), 1e-6)

    # sampled commutator pairs against the nested-FD oracle
    pairs = [(i, rho) for i in range(1, 8) for rho in range(1, 18)]
    rng.shuffle(pairs)
    worst = 0.0
    for i, rho in pairs[:20]:
        xq = rng.uniform(-1.5, 1.5, 3)
        vq = rng.uniform(-1.8, 1.8, 3)
        pt = PhasePoint(xq, vq)
        tab = first_order_commutator(i, f"Gamma{rho}", t0, pt)
        lhs = (1.0 + pert) * tab.apply(
            hjet, t0, [xq[0], xq[1], xq[2]], [vq[0], vq[1], vq[2]])
        rhs = oracle.fd_commutator(i, f"Gamma{rho}", hval, t0, xq, vq)
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-3))
    report.add("geometry.first_order_commutators", float(worst), 1e-5)

    # modulation derivative identity
    worst = 0.0
    from .geometry import base as gbase

    def dt_val(tq, xq, vq):
        return gbase.dtilde(tq, [xq[..., 0], xq[..., 1], xq[..., 2]],
                            [vq[..., 0], vq[..., 1], vq[..., 2]])

    for k in range(1, 18):
        xq = rng.uniform(-2, 2, 3)
        vq = rng.uniform(-2, 2, 3)
        e1, e2, val = dtilde_derivative(k, t0, PhasePoint(xq, vq))
        ref = oracle.fd_vector_field(
            f"Gamma{k}", lambda tq, xw, vw: dt_val(tq, xw, vw), t0, xq, vq)
        worst = max(worst, abs((1.0 + pert) * val - ref))
    report.add("geometry.dtilde_derivative", float(worst), 1e-5)


def _suite_lpfourier(seed, samples, report):
    from .spectral import SpectralGrid, symbol_norm
    rng = np.random.default_rng(seed)
    sg = SpectralGrid(24, 8.0)
    f = rng.standard_normal((24, 24, 24))
    fh = sg.fft(f)
    back = sg.ifft(fh).real
    report.add("lp.roundtrip", float(np.abs(back - f).max()
                                     / np.abs(f).max()), 1e-12)
    pars = abs(sg.l2_norm(f) - sg.l2_norm_hat(fh)) / sg.l2_norm(f)
    report.add("lp.parseval", float(pars), 1e-10)
    # partition of unity over resolvable bands
    from . import cutoffs
    r = np.geomspace(sg.k_min, sg.k_nyquist, 200)
    acc = sum(cutoffs.psi_band(k, r) for k in
              cutoffs.band_range(sg.k_min / 4, sg.k_nyquist * 4))
    report.add("lp.partition", float(np.abs(acc - 1).max()), 1e-10)
    # div Q = Id on mean-zero data
    f0 = f - f.mean()
    fh0 = sg.fft(f0)
    div = sg.divergence([sg.q_op(fh0, i) for i in range(3)])
    report.add("lp.div_q", float(np.abs(sg.ifft(div).real - f0).max()
                                 / np.abs(f0).max()), 1e-10)
    # half-wave isometry
    u = rng.standard_normal((24, 24, 24)) \
        + 1j * rng.standard_normal((24, 24, 24))
    uh = sg.fft(u)
    prop = sg.halfwave(uh, 17.3)
    report.add("lp.halfwave_isometry",
               float(abs(sg.l2_norm_hat(prop) - sg.l2_norm_hat(uh))
                     / sg.l2_norm_hat(uh)), 1e-12)
    # symbol norms: scaling of m=1 across bands
    vals = [symbol_norm(lambda xi: np.ones(xi.shape[:-1]), k,
                        derivative_cap=0) for k in (-1, 0, 1, 2)]
    spread = (max(vals) - min(vals)) / max(vals)
    report.add("lp.symbol_scale_invariance", float(spread), 0.05)


def _suite_profiles(seed, samples, report):
    from .profiles import (DistributionGrid, PhaseSpaceGrid, WaveState,
                           fft_x_slices, modified_profile, profile_rhs_g,
                           recover_fields, rhs_g_direct_convolution,
                           to_profile, from_profile)
    rng = np.random.default_rng(seed)
    grid = PhaseSpaceGrid(8, 6, 6.0, 2.0)
    n, m = grid.nx, grid.nv

    def rand6(scale=1.0):
        c = np.zeros((n, n, n, m, m, m), complex)
        idx = [0, 1, 2, -2, -1]
        for _ in range(40):
            sel = tuple(rng.choice(idx, 6))
            c[sel] = rng.normal() + 1j * rng.normal()
        f = np.fft.ifftn(c).real
        return scale * f / np.abs(f).max()

    def rand3(scale=1.0):
        c = np.zeros((n, n, n), complex)
        for _ in range(20):
            sel = tuple(rng.choice([0, 1, 2, -2, -1], 3))
            c[sel] = rng.normal() + 1j * rng.normal()
        f = np.fft.ifftn(c).real
        return scale * f / np.abs(f).max()

    t = 1.3
    f = DistributionGrid(grid, rand6(), "physical")
    g = to_profile(f, t)
    f2 = from_profile(g, t)
    report.add("profiles.roundtrip",
               float(np.abs(f2.values - f.values).max()
                     / np.abs(f.values).max()), 1e-8)
    phi = rand3()
    phi -= phi.mean()
    w = WaveState(grid, phi, rand3(), t=t)
    gm = DistributionGrid(grid, rand6(0.5), "profile")
    ht = modified_profile(w, {(): gm}, t)
    phi_r, dt_r = recover_fields(ht, grid, {(): gm}, t)
    report.add("profiles.recovery",
               float(np.abs(phi_r - phi).max() / np.abs(phi).max()), 1e-8)
    rate = fft_x_slices(profile_rhs_g(w, gm, t))
    direct = rhs_g_direct_convolution(w, gm, t).reshape(rate.shape)
    report.add("profiles.dual_formulation",
               float(np.abs(rate - direct).max() / np.abs(rate).max()), 1e-6)


class Report:
    def __init__(self):
        self.checks = []

    def add(self, name, residual, tol):
        self.checks.append({"check": name, "max_residual": residual,
                            "tolerance": tol, "pass": bool(residual <= tol)})

    @property
    def ok(self):
        return all(c["pass"] for c in self.checks)

    def to_json(self, extra=None):
        d = {"checks": self.checks, "pass": self.ok}
        if extra:
            d.update(extra)
        return json.dumps(d, indent=2, sort_keys=True)


def cmd_verify(args):
    report = Report()
    t0 = time.time()
    suites = {"geometry": _suite_geometry, "lpfourier": _suite_lpfourier,
              "profiles": _suite_profiles}
    chosen = list(suites) if args.suite == "all" else [args.suite]
    for name in chosen:
        suites[name](args.seed, args.samples, report)
    payload = report.to_json(_manifest(None, args.seed, [], time.time() - t0))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
    print(payload)
    return EXIT_OK if report.ok else EXIT_BREACH


# ---------------------------------------------------------------------------
# simulate

def cmd_simulate(args):
    from .diagnostics import LowOrderAccumulator, energy_report
    cfg, prefix = _parse_config(args.config)
    if args.cadence:
        cfg.cadence = args.cadence
    if args.seed is not None:
        cfg.seed = args.seed
    t0 = time.time()
    outputs = []
    acc = LowOrderAccumulator()
    rows = []
    try:
        for i, snap in enumerate(run(cfg)):
            path = f"{prefix}_{i:04d}.rvn"
            save_snapshot(path, snap)
            outputs.append(path)
            acc.update(snap)
            rep = energy_report(snap, acc, n_max=1)
            rows.append(rep.row())
    except InstabilityError as exc:
        print(json.dumps({"error": str(exc)}))
        return EXIT_INSTABILITY
    csv_path = f"{prefix}_energies.csv"
    with open(csv_path, "w", newline="") as fh:
        wr = csv.writer(fh)
        from .diagnostics import EnergyReport
        wr.writerow(EnergyReport.HEADER)
        wr.writerows(rows)
    outputs.append(csv_path)
    man = _manifest(cfg, cfg.seed, outputs, time.time() - t0)
    man_path = f"{prefix}_manifest.json"
    with open(man_path, "w") as fh:
        json.dump(man, fh, indent=2, sort_keys=True)
    print(json.dumps({"outputs": outputs, "manifest": man_path}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# diagnose

def cmd_diagnose(args):
    from . import oracle
    from .diagnostics import decay_scan_field, density_decay_scan, \
        weight_ratio_check
    paths = sorted(globmod.glob(args.snapshots))
    if not paths:
        print(json.dumps({"error": "no snapshots matched"}))
        return EXIT_BREACH
    snaps = [load_snapshot(p, mode=args.mode) for p in paths]
    out = {"n_snapshots": len(snaps),
           "t_range": [snaps[0].t, snaps[-1].t]}
    scans = args.scans.split(",")
    if "field" in scans:
        tab = decay_scan_field(snaps)
        out["field_scan"] = {k: v.tolist() for k, v in tab.items()}
        ts, vals = tab["t"], tab["halfwave_sup"]
        keep = ts > 0
        if keep.sum() >= 8 and ts[keep].max() / ts[keep].min() >= 10:
            s, err = oracle.slope_fit(ts[keep], vals[keep])
            out["field_scan"]["halfwave_slope"] = [s, err]
        out["field_scan"]["weighted_max_over_time"] = \
            float(np.max(tab["weighted_sup"]))
    if "density" in scans:
        try:
            for p in (1, 2):
                size = density_decay_scan(snaps, alpha=0, p=p,
                                          window=args.window)
                out[f"density_scan_p{p}"] = {
                    "slope": size["slope"], "stderr": size["stderr"],
                    "t": size["t"].tolist(), "value": size["value"].tolist()}
        except ValueError as exc:
            out["density_scan_error"] = str(exc)
    if "weights" in scans:
        out["weight_ratio"] = weight_ratio_check(
            [1.0, 10.0, 100.0, 1000.0], n_samples=args.samples,
            seed=args.seed)
    payload = json.dumps(out, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
    print(payload)
    return EXIT_OK


def main(argv=None):
    ap = argparse.ArgumentParser(prog="rvnlab")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p_sim = sub.add_parser("simulate", help="run the solver from a config")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--cadence", type=int, default=None)
    p_sim.set_defaults(fn=cmd_simulate)

    p_ver = sub.add_parser("verify", help="run identity/oracle suites")
    p_ver.add_argument("--suite", default="all",
                       choices=["geometry", "profiles", "lpfourier", "all"])
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--samples", type=float, default=1e5)
    p_ver.add_argument("--out", default=None)
    p_ver.set_defaults(fn=cmd_verify)

    p_diag = sub.add_parser("diagnose", help="scan saved snapshots")
    p_diag.add_argument("--snapshots", required=True,
                        help="glob of .rvn files")
    p_diag.add_argument("--scans", default="field,density,weights")
    p_diag.add_argument("--mode", default="coupled")
    p_diag.add_argument("--seed", type=int, default=0)
    p_diag.add_argument("--samples", type=int, default=100000)
    p_diag.add_argument("--window", type=float, nargs=2, default=None)
    p_diag.add_argument("--out", default=None)
    p_diag.set_defaults(fn=cmd_diagnose)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
