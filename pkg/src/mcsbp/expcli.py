"""Experiment runner: operator checks, advection equivalence, spectra, Burgers studies.

Each ``cmd_*`` function returns a :class:`RunReport`; ``main`` wires them to
the command line, writes CSV plus a JSON sidecar, and maps gate results to
the exit status (0 pass, 1 gate failure, 2 configuration error).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .disc import (
    advect_equivalence,
    advection_system,
    burgers_run,
    convergence_rates,
    dg_reduce,
    spectrum,
)
from .operators import (
    OperatorError,
    build_mc,
    build_sbp_minnorm,
    export_json,
    import_json,
    verify_operator,
)
from .quadrature import collapsed_tri_rule, liu_4c_rule, tri_edge_rules

__all__ = [
    "ConfigError",
    "RunReport",
    "cmd_verify_ops",
    "cmd_advect_equiv",
    "cmd_spectra",
    "cmd_negweight_equiv",
    "cmd_burgers",
    "cmd_export_ops",
    "main",
]

# reference Burgers rates at N1D = 32 -> 64
REFERENCE_RATES = {
    "standard": {1: 4.011, 2: 4.069, 3: 5.221, 4: 6.519},
    "ec": {1: 2.012, 2: 4.022, 3: 3.599, 4: 6.247},
}
RATE_BAND = 0.4


class ConfigError(ValueError):
    pass


@dataclass
class RunReport:
    experiment: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    gates: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)  # extra CSV tables: name -> (columns, rows)

    def gate(self, name: str, ok: bool, detail: str = "") -> bool:
        self.gates.append({"name": name, "passed": bool(ok), "detail": detail})
        return bool(ok)

    @property
    def passed(self) -> bool:
        return all(g["passed"] for g in self.gates)

    def write(self, out: str | Path) -> list[Path]:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        written = [out]
        _write_csv(out, self.columns, self.rows)
        for name, (cols, rows) in self.tables.items():
            extra = out.with_name(f"{out.stem}_{name}{out.suffix or '.csv'}")
            _write_csv(extra, cols, rows)
            written.append(extra)
        side = out.with_suffix(".json")
        side.write_text(json.dumps(
            {"experiment": self.experiment, "passed": self.passed, "gates": self.gates, "metadata": self.metadata},
            indent=2, default=_jsonable,
        ) + "\n")
        written.append(side)
        return written


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return v


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(columns)
        for row in rows:
            wr.writerow([_fmt(row.get(c, "")) for c in columns])


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _ops(kind: str, P: int, Q: int | None, quad: str = "collapsed"):
    if quad == "liu4c":
        vol, faces = liu_4c_rule(), tri_edge_rules(4)
    else:
        vol, faces = collapsed_tri_rule(Q), tri_edge_rules(Q)
    if kind == "mc":
        return build_mc(P, vol, faces)
    if kind == "sbp":
        return build_sbp_minnorm(P, vol, faces)
    raise ConfigError(f"unknown operator kind {kind!r}")


def _check_degrees(degrees, lo=1, hi=12):
    for P in degrees:
        if not lo <= P <= hi:
            raise ConfigError(f"degree {P} outside [{lo}, {hi}]")


def cmd_verify_ops(degrees=(1, 2, 3, 4, 5, 6), quad_mults=(2,), kinds=("mc", "sbp"), quad="collapsed",
                   tol=None) -> RunReport:
    """Residuals of the SBP definition and compatibility for each case; also ``max|D_sbp - D_mc|``."""
    _check_degrees(degrees)
    cols = ["kind", "P", "Q", "N", "accuracy", "sbp", "boundary_accuracy", "compatibility", "nullspace_dim",
            "tol", "passed", "diff_vs_mc"]
    rep = RunReport("verify-ops", cols)
    for P in degrees:
        for m in quad_mults:
            Q = m * P if quad == "collapsed" else None
            built = {}
            for kind in kinds:
                try:
                    op = _ops(kind, P, Q, quad)
                except OperatorError as exc:
                    rep.gate(f"{kind} P={P} Q={Q} precondition", False, str(exc))
                    rep.rows.append({"kind": kind, "P": P, "Q": Q, "passed": False})
                    continue
                built[kind] = op
                r = verify_operator(op, tol)
                row = {"kind": kind, "P": P, "Q": op.Q, "N": op.N, "accuracy": r.accuracy_residual,
                       "sbp": r.sbp_residual, "boundary_accuracy": r.boundary_accuracy_residual,
                       "compatibility": r.compatibility_residual, "nullspace_dim": r.nullspace_dim,
                       "tol": r.tol, "passed": r.passed}
                if kind != "mc" and "mc" in built:
                    row["diff_vs_mc"] = float(np.max(np.abs(op.D - built["mc"].D)))
                rep.rows.append(row)
                rep.gate(f"{kind} P={P} Q={op.Q} identities", r.passed,
                         f"max residual {max(r.accuracy_residual, r.sbp_residual, r.boundary_accuracy_residual, r.compatibility_residual):.3e}")
    return rep


def cmd_advect_equiv(degrees=(3, 6), quad_mults=(2, 4), full=False, tol=1e-12, T=2.0) -> RunReport:
    """MC vs modal DG for single-element advection over degrees and quadrature multipliers."""
    if full:
        degrees, quad_mults = (3, 6, 9, 12), (2, 4, 6)
    _check_degrees(degrees)
    cols = ["P", "quad_mult", "Q", "N", "dt", "steps", "l2_diff", "max_null_coord"]
    rep = RunReport("advect-equiv", cols)
    for P in degrees:
        for m in quad_mults:
            op = _ops("mc", P, m * P)
            r = advect_equivalence(op, T=T)
            rep.rows.append({"P": P, "quad_mult": m, "Q": m * P, "N": op.N, "dt": r.dt, "steps": r.steps,
                             "l2_diff": r.l2_diff, "max_null_coord": r.max_null_coord})
            rep.gate(f"P={P} Q={m * P} diff", r.l2_diff <= tol, f"{r.l2_diff:.3e} <= {tol:g}")
    return rep


def _match_sets(a: np.ndarray, b: np.ndarray) -> float:
    """Largest nearest-neighbour distance from each point of ``a`` to ``b`` and back."""
    if a.size != b.size:
        return math.inf
    if a.size == 0:
        return 0.0
    d = np.abs(a[:, None] - b[None, :])
    return float(max(np.max(np.min(d, axis=1)), np.max(np.min(d, axis=0))))


def cmd_spectra(P=3, quad_mults=(2, 4, 6), kinds=("mc", "sbp"), tol=1e-8) -> RunReport:
    """Advection eigenvalues per (kind, Q); gates on the MC zero count and Q independence and on SBP growth."""
    _check_degrees([P])
    cols = ["kind", "P", "Q", "N", "spectral_radius", "zero_count", "expected_zero_count", "dg_match"]
    rep = RunReport("spectra", cols)
    eig_rows = []
    mc_nonzero, radius = {}, {}
    for kind in kinds:
        for m in quad_mults:
            Q = m * P
            op = _ops(kind, P, Q)
            A = advection_system(op).A
            sp = spectrum(A, tol)
            row = {"kind": kind, "P": P, "Q": Q, "N": op.N, "spectral_radius": sp.spectral_radius,
                   "zero_count": sp.zero_count}
            radius[(kind, Q)] = sp.spectral_radius
            if kind == "mc":
                expected = op.N - op.NP
                Adg, _ = dg_reduce(A, np.zeros(op.N), op)
                dg = spectrum(Adg, tol)
                match = _match_sets(sp.nonzero(), dg.eigenvalues)
                row.update(expected_zero_count=expected, dg_match=match)
                mc_nonzero[Q] = sp.nonzero()
                rep.gate(f"mc Q={Q} zero count", sp.zero_count == expected, f"{sp.zero_count} vs {expected}")
                rep.gate(f"mc Q={Q} dg spectrum", match <= tol, f"{match:.3e}")
            rep.rows.append(row)
            eig_rows += [{"kind": kind, "P": P, "Q": Q, "real": z.real, "imag": z.imag} for z in sp.eigenvalues]
    rep.tables["eigenvalues"] = (["kind", "P", "Q", "real", "imag"], eig_rows)
    qs = sorted(mc_nonzero)
    for q in qs[1:]:
        d = _match_sets(mc_nonzero[qs[0]], mc_nonzero[q])
        rep.gate(f"mc nonzero set Q={qs[0]} vs Q={q}", d <= tol, f"{d:.3e}")
    if "mc" in kinds and len(qs) > 1:
        r = [radius[("mc", q)] for q in qs]
        var = (max(r) - min(r)) / max(r)
        rep.gate("mc spectral radius independent of Q", var < 1e-6, f"relative spread {var:.3e}")
    if "sbp" in kinds and 2 in quad_mults and 6 in quad_mults:
        ratio = radius[("sbp", 6 * P)] / radius[("sbp", 2 * P)]
        rep.gate("sbp spectral radius growth 6P vs 2P", ratio >= 2.0, f"ratio {ratio:.3f}")
        rep.metadata["sbp_radius_ratio"] = ratio
    return rep


def cmd_negweight_equiv(tol=1e-12) -> RunReport:
    """P = 2 MC on the ten-point rule with negative vertex weights vs modal DG at t = 2."""
    cols = ["P", "N", "min_weight", "dt", "steps", "l2_diff", "zero_count", "energy_max"]
    rep = RunReport("negweight-equiv", cols)
    op = _ops("mc", 2, None, quad="liu4c")
    r = advect_equivalence(op, T=2.0)
    zeros = spectrum(advection_system(op).A).zero_count
    rep.rows.append({"P": 2, "N": op.N, "min_weight": float(op.w.min()), "dt": r.dt, "steps": r.steps,
                     "l2_diff": r.l2_diff, "zero_count": zeros, "energy_max": r.energy_max})
    rep.gate("l2 diff", r.l2_diff <= tol, f"{r.l2_diff:.3e}")
    rep.gate("zero eigenvalue count", zeros == op.N - op.NP, f"{zeros} vs {op.N - op.NP}")
    rep.gate("bounded energy", math.isfinite(r.energy_max) and r.energy_max < 10.0, f"{r.energy_max:.4g}")
    return rep


def cmd_burgers(scheme="standard", degrees=(1, 2, 3), n1d=(4, 8, 16, 32), quad_mults=(2,), tol=1e-12,
                T=1.0) -> RunReport:
    """Errors, rates and MC-vs-DG differences for a Burgers scheme.

    Gates: equivalence for the Standard and projected schemes, and the
    reference rate band whenever the sweep contains the 32 -> 64 pair.
    """
    if scheme not in REFERENCE_RATES and scheme != "ec-projected":
        raise ConfigError(f"unknown scheme {scheme!r}")
    _check_degrees(degrees, 1, 6)
    n1d = sorted(n1d)
    if any(n < 2 for n in n1d):
        raise ConfigError("N1D must be at least 2")
    cols = ["scheme", "P", "quad_mult", "N1D", "h", "dt", "steps", "l2_error", "rate", "reference_rate",
            "dg_diff", "entropy_change"]
    rep = RunReport("burgers", cols)
    for P in degrees:
        for m in quad_mults:
            runs = [burgers_run(scheme, P, n, quad_mult=m, T=T) for n in n1d]
            hs = [2 * math.pi / n for n in n1d]
            rates = [math.nan] + convergence_rates(hs, [r.error for r in runs])
            ref = REFERENCE_RATES.get(scheme, {}).get(P)
            for n, h, r, rate in zip(n1d, hs, runs, rates):
                rep.rows.append({"scheme": scheme, "P": P, "quad_mult": m, "N1D": n, "h": h, "dt": r.dt,
                                 "steps": r.steps, "l2_error": r.error, "rate": rate,
                                 "reference_rate": ref if n == 64 else "", "dg_diff": r.dg_diff,
                                 "entropy_change": r.entropy_change})
                if scheme != "ec":
                    rep.gate(f"P={P} x{m} N1D={n} equivalence", r.dg_diff <= tol, f"{r.dg_diff:.3e}")
            if ref is not None and 32 in n1d and 64 in n1d and m == 2:
                rate = rates[n1d.index(64)]
                rep.gate(f"P={P} rate 32->64", abs(rate - ref) <= RATE_BAND, f"{rate:.3f} vs {ref}")
    return rep


def cmd_export_ops(P=3, Q=6, kind="mc", path="operators.json") -> RunReport:
    """Write the JSON operator bundle and check that it round-trips."""
    op = _ops(kind, P, Q)
    text = export_json(op, path)
    back = import_json(path)
    r = verify_operator(back)
    same = all(np.array_equal(getattr(op, f), getattr(back, f)) for f in ("w", "D", "E", "R", "V", "Vf", "wf", "nf"))
    rep = RunReport("export-ops", ["kind", "P", "Q", "N", "path", "bytes", "roundtrip_exact", "verify_passed"])
    rep.rows.append({"kind": kind, "P": P, "Q": Q, "N": op.N, "path": str(path), "bytes": len(text),
                     "roundtrip_exact": same, "verify_passed": r.passed})
    rep.gate("lossless round trip", same)
    rep.gate("imported operator verifies", r.passed)
    return rep


EXPERIMENTS = ("verify-ops", "advect-equiv", "spectra", "negweight-equiv", "burgers", "export-ops")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mcsbp", description=__doc__.splitlines()[0])
    p.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    p.add_argument("--degrees", type=_int_list, help="polynomial degrees, e.g. 1,2,3")
    p.add_argument("--quad-mult", type=_int_list, help="quadrature degree multipliers m (Q = m P)")
    p.add_argument("--n1d", type=_int_list, help="mesh resolutions for burgers")
    p.add_argument("--scheme", default="standard", help="burgers scheme: standard, ec, ec-projected")
    p.add_argument("--kind", default=None, help="operator kind: mc, sbp or both")
    p.add_argument("--quad", default="collapsed", choices=("collapsed", "liu4c"), help="volume rule for verify-ops")
    p.add_argument("--out", default=None,
                   help="output CSV, JSON sidecar written next to it (export-ops: operator bundle path)")
    p.add_argument("--tol", type=float, default=None, help="gate tolerance override")
    p.add_argument("--full", action="store_true", help="full degree and quadrature sweep for advect-equiv")
    return p


def _kinds(arg, default):
    if arg is None:
        return default
    if arg == "both":
        return ("mc", "sbp")
    if arg not in ("mc", "sbp"):
        raise ConfigError(f"unknown kind {arg!r}")
    return (arg,)


def _dispatch(args) -> RunReport:
    tol = {} if args.tol is None else {"tol": args.tol}
    e = args.experiment
    if e == "verify-ops":
        return cmd_verify_ops(args.degrees or range(1, 7), args.quad_mult or (2,), _kinds(args.kind, ("mc", "sbp")),
                              args.quad, args.tol)
    if e == "advect-equiv":
        return cmd_advect_equiv(args.degrees or (3, 6), args.quad_mult or (2, 4), args.full, **tol)
    if e == "spectra":
        degrees = args.degrees or [3]
        if len(degrees) != 1:
            raise ConfigError("spectra takes a single degree")
        return cmd_spectra(degrees[0], args.quad_mult or (2, 4, 6), _kinds(args.kind, ("mc", "sbp")), **tol)
    if e == "negweight-equiv":
        return cmd_negweight_equiv(**tol)
    if e == "burgers":
        return cmd_burgers(args.scheme, args.degrees or (1, 2, 3), args.n1d or (4, 8, 16, 32),
                           args.quad_mult or (2,), **tol)
    degrees = args.degrees or [3]
    mult = (args.quad_mult or [2])[0]
    kind = _kinds(args.kind, ("mc",))
    if len(degrees) != 1 or len(kind) != 1:
        raise ConfigError("export-ops takes a single degree and kind")
    path = str(Path(args.out).with_suffix(".json")) if args.out else f"operators_{kind[0]}_P{degrees[0]}.json"
    return cmd_export_ops(degrees[0], mult * degrees[0], kind[0], path)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        report = _dispatch(args)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    report.metadata.update(wall_time=time.perf_counter() - start, version=_version(), seed=None,
                           argv=list(sys.argv[1:] if argv is None else argv))
    out = args.out or f"{args.experiment}.csv"
    if args.experiment == "export-ops":
        bundle = Path(report.rows[0]["path"])
        out = str(bundle.with_name(f"{bundle.stem}_report.csv"))
    for path in report.write(out):
        print(f"wrote {path}")
    for g in report.gates:
        print(f"{'PASS' if g['passed'] else 'FAIL'}  {g['name']}  {g['detail']}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
