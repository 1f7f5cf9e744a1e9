"""Command-line front end: parse, screen, classify, count cycles, confirm numerically.

Exit codes: 0 success, 1 verdict and oracle disagree, 2 invalid input,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import classify as C
from . import melnikov as M
from . import phaseflow as PF
from .qhalg import (NoPeriodicOrbit, NormalForm, ParityCase, QHError, QHPolynomial, SemiQHSystem,
                    existence_screen, normal_form, parse_polynomial, system_from_json)

EXIT_OK, EXIT_DISAGREE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("semiqh")

DEMOS = {
    # every orbit periodic
    "hamiltonian": {"p": 1, "q": 1, "P": [["1", 0, 3]], "Q": [["-1", 1, 0]]},
    # y = 0 invariant, no periodic orbit
    "b0zero": {"p": 1, "q": 1, "P": [["1", 0, 3], ["1", 3, 0]], "Q": [["1", 0, 1]]},
    # perturbed Hamiltonian with two designed limit cycles
    "designed": {"p": 1, "q": 1, "P": [["1", 0, 3]], "Q": [["-1", 1, 0]], "radii": [1, 2]},
    "center": {"p": 1, "q": 1, "P": [["-1", 0, 3], ["1/2", 2, 1]], "Q": [["1", 1, 0]]},
    "weak-focus": {"p": 1, "q": 1, "P": [["-1", 0, 3], ["1/10", 1, 2], ["1/2", 2, 1]], "Q": [["1", 1, 0]]},
    "infinity-center": {"p": 1, "q": 1, "P": [["-1", 0, 5]], "Q": [["1", 3, 0], ["1/2", 1, 2]]},
    "saddle": {"p": 1, "q": 1, "P": [["1", 1, 0]], "Q": [["-1", 0, 3]]},
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: dict | None
    tol_rel: float = 1e-12
    tol_abs: float = 1e-14
    eps: float = 1e-3
    seed: int = 0
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 1e-13 <= self.tol_rel <= 1e-3:
            raise ValueError(f"--tol-rel {self.tol_rel} outside [1e-13, 1e-3]")
        if not 0 < self.tol_abs <= 1e-3:
            raise ValueError(f"--tol-abs {self.tol_abs} outside (0, 1e-3]")
        if not 0 < self.eps <= 0.1:
            raise ValueError(f"--eps {self.eps} outside (0, 0.1]")

    @property
    def flow(self) -> PF.FlowConfig:
        return PF.FlowConfig(rtol=self.tol_rel, atol=self.tol_abs)

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


class Disagreement(Exception):
    pass


# -- input -------------------------------------------------------------------

def _load_input(args) -> dict | None:
    if getattr(args, "demo", None):
        return dict(DEMOS[args.demo])
    if getattr(args, "P", None) or getattr(args, "Q", None):
        if not (args.P and args.Q):
            raise QHError("--P and --Q must be given together")
        p, q = _int_pair(args.weights or "1,1")
        return {"p": p, "q": q, "P": parse_polynomial(args.P).to_json(), "Q": parse_polynomial(args.Q).to_json()}
    src = getattr(args, "input", None)
    if src is None:
        return None
    if src == "-":
        text = sys.stdin.read()
    elif src.lstrip().startswith("{"):
        text = src
    else:
        text = Path(src).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise QHError(f"input is not valid JSON: {exc}") from exc


def _int_pair(text: str) -> tuple[int, int]:
    parts = [int(v) for v in text.split(",")]
    if len(parts) != 2:
        raise QHError(f"expected two comma-separated integers, got {text!r}")
    return parts[0], parts[1]


def _floats(text: str | None) -> list[float]:
    if not text:
        return []
    return [float(Fraction(v)) for v in text.split(",") if v.strip()]


def _system(data: dict | None) -> SemiQHSystem:
    if data is None:
        raise QHError("no system given (path, '-', inline JSON, --P/--Q or --demo)")
    return system_from_json({k: data[k] for k in ("p", "q", "P", "Q") if k in data})


def _screened(data) -> tuple[SemiQHSystem, NormalForm | NoPeriodicOrbit]:
    s = _system(data)
    return s, existence_screen(s)


def _both_odd(data) -> NormalForm:
    s, v = _screened(data)
    if isinstance(v, NoPeriodicOrbit):
        raise QHError(f"no periodic orbit ({v.code}): {v.reason}")
    if v.parity_case is not ParityCase.BOTH_ODD:
        raise QHError("this command needs the both-odd parity case")
    return v


def _original_field(s: SemiQHSystem) -> PF.VectorField:
    P, Q, _ = s.original if s.original else (s.P, s.Q, s.w)
    return PF.VectorField.from_polynomials(P, Q)


# -- commands ------------------------------------------------------------------

def cmd_classify(cfg: RunConfig, args) -> dict:
    s, v = _screened(cfg.input)
    out = {"p": s.p, "q": s.q, "m": s.m, "n": s.n, "swapped": s.swapped}
    if isinstance(v, NoPeriodicOrbit):
        out.update(verdict="NoPeriodicOrbit", code=v.code, reason=v.reason)
        out["text"] = f"no periodic orbit ({v.code}): {v.reason}"
    else:
        out.update(verdict="NormalForm", normal_form=v.to_json(), parity_case=v.parity_case.value)
        out["text"] = f"normal form; {v.parity_case.value}; r1={v.r1} r2={v.r2}"
        if v.parity_case is ParityCase.Q_EVEN:
            out["reading"] = "q even: m, n both even and r1, r2 both odd"
            out["symmetry_center"] = C.symmetry_center_check(v)
    return out


def cmd_normal_form(cfg: RunConfig, args) -> dict:
    s = _system(cfg.input)
    nf = normal_form(s)
    if nf is None:
        v = existence_screen(s)
        return {"verdict": "NoPeriodicOrbit", "code": v.code, "reason": v.reason,
                "text": f"no normal form ({v.code}): {v.reason}"}
    v = existence_screen(s)
    nfj = (v if isinstance(v, NormalForm) else nf).to_json()
    text = f"a={nfj['a']} b={nfj['b']} r1={nf.r1} r2={nf.r2}"
    return {"normal_form": nfj, "text": text}


def cmd_lower_bound(cfg: RunConfig, args) -> dict:
    if args.pqmn:
        p, q, m, n = (int(v) for v in args.pqmn.split(","))
    else:
        nf = _both_odd(cfg.input)
        p, q, m, n = nf.p, nf.q, nf.m, nf.n
    lb = M.lower_bound(p, q, m, n)
    return {"p": p, "q": q, "m": m, "n": n, "lower_bound": lb, "text": f"lower bound N({p},{q},{m},{n}) >= {lb}"}


def _perturbation(cfg: RunConfig, args, nf: NormalForm) -> M.PerturbationSpec:
    given = (cfg.input or {}).get("perturbation", {})
    a = _floats(args.a) if args.a else [float(Fraction(str(v))) for v in given.get("a", [])]
    b = _floats(args.b) if args.b else [float(Fraction(str(v))) for v in given.get("b", [])]
    a += [0.0] * (nf.r1 // nf.p - len(a))
    b += [0.0] * (nf.r2 // nf.q - len(b))
    pert = M.PerturbationSpec(tuple(a), tuple(b), cfg.eps)
    pert.check(nf)
    return pert


def _zeros_text(rep: M.CycleReport) -> str:
    if rep.degenerate:
        return "F vanishes identically (first-order center candidate)"
    return f"{rep.zero_count} simple positive zeros at rho = " + ", ".join(f"{z.rho:.6g}" for z in rep.zeros if z.simple)


def cmd_abelian(cfg: RunConfig, args) -> dict:
    nf = _both_odd(cfg.input)
    pert = _perturbation(cfg, args, nf)
    af = M.abelian_coefficients(nf, pert)
    rep = M.count_positive_simple_zeros(af)
    return {"abelian": af.to_json(), "report": rep.to_json(), "text": _zeros_text(rep)}


def _radii(cfg: RunConfig, args) -> list[float]:
    if args.radii:
        return _floats(args.radii)
    return [float(v) for v in (cfg.input or {}).get("radii", [])]


def cmd_design(cfg: RunConfig, args) -> dict:
    nf = _both_odd(cfg.input)
    pert = M.design_perturbation(nf, _radii(cfg, args), epsilon=cfg.eps)
    rep = M.count_positive_simple_zeros(M.abelian_coefficients(nf, pert))
    return {"design": pert.to_json(), "report": rep.to_json(),
            "text": f"a={list(pert.a)} b={list(pert.b)}; {_zeros_text(rep)}"}


def cmd_cycles(cfg: RunConfig, args) -> dict:
    nf = _both_odd(cfg.input)
    lb = M.lower_bound(nf.p, nf.q, nf.m, nf.n)
    radii = _radii(cfg, args)
    if not radii:
        return {"lower_bound": lb, "text": f"lower bound {lb}; no design requested"}
    pert = M.design_perturbation(nf, radii, epsilon=cfg.eps)
    rep = M.count_positive_simple_zeros(M.abelian_coefficients(nf, pert))
    rep.lower_bound = lb
    ok, search = M.confirm_cycles(rep, nf, pert, args.rel_tol, args.grid, cfg.flow)
    found = [c.rho_equiv for c in search.cycles] if search else []
    out = {"lower_bound": lb, "design": pert.to_json(), "report": rep.to_json(), "cycles_found": found,
           "base": "x' = y^r1, y' = -x^r2 plus epsilon times the design"}
    out["text"] = (f"lower bound {lb}; predicted {rep.zero_count}; confirmed "
                   f"{sum(c['matched'] for c in rep.confirmed)} at rho = " + ", ".join(f"{r:.5g}" for r in found))
    if not ok:
        raise Disagreement(json.dumps(out))
    return out


def cmd_center(cfg: RunConfig, args) -> dict:
    nf = _both_odd(cfg.input)
    verdict = C.center_at_origin(nf)
    out = {"verdict": verdict.to_json(), "symmetry": C.symmetry_center_check(nf)}
    if verdict.kind == "Undetermined":
        out["text"] = f"Undetermined ({verdict.code})"
        return out
    scan = C.oracle_center(nf, args.samples, cfg.flow)
    out["oracle"] = {"xs": list(scan.xs), "rel_displacements": list(scan.rel_displacements)}
    if verdict.kind == "Center":
        agree = scan.max_rel <= 1e-8
        out["text"] = f"Center ({verdict.code}); oracle displacement {scan.max_rel:.1e}"
    else:
        agree = scan.sign == verdict.displacement_sign
        out["text"] = (f"WeakFocus order {verdict.order_index} ({verdict.code}), stability_sign "
                       f"{verdict.stability_sign:+d}; oracle displacement sign {scan.sign:+d}")
    out["agree"] = agree
    if not agree:
        raise Disagreement(json.dumps(out))
    return out


def cmd_infinity(cfg: RunConfig, args) -> dict:
    nf = _both_odd(cfg.input)
    verdict = C.infinity_analysis(nf)
    scan = C.infinity_scan(nf, args.x_lo, args.x_hi, args.samples, cfg.flow)
    verdict = C.InfinityVerdict(**{**verdict.__dict__, "orientation": C.infinity_orientation(nf, verdict, scan)})
    out = {"verdict": verdict.to_json(),
           "oracle": {"xs": list(scan.xs), "rel_displacements": list(scan.rel_displacements)}}
    if verdict.kind == "CenterAtInfinity":
        agree = scan.max_rel <= 1e-6
        out["text"] = f"CenterAtInfinity ({verdict.code}); annulus displacement {scan.max_rel:.1e}"
    else:
        agree = scan.sign != 0
        out["text"] = (f"FocusAtInfinity order {verdict.order_index} ({verdict.code}), sign(b) "
                       f"{verdict.stability_sign:+d}; observed orientation {verdict.orientation}")
    out["agree"] = agree
    if not agree:
        raise Disagreement(json.dumps(out))
    return out


def cmd_local_type(cfg: RunConfig, args) -> dict:
    if args.lam is not None:
        A, B = parse_polynomial(args.A or "0"), parse_polynomial(args.B or "0")
        verdict = C.classify_degenerate(Fraction(args.lam), A, B, args.order)
        vf = PF.VectorField.from_polynomials(A, B + QHPolynomial({(0, 1): Fraction(args.lam)}))
    else:
        s = _system(cfg.input)
        nf = normal_form(s)
        if nf is None or s.m != 1 or s.q != 1:
            raise QHError("local-type needs an m = 1 system with weights (p, 1), or --lam/--A/--B")
        verdict = C.local_type_m1(nf.a[0], nf.a[1], nf.b, nf.p, nf.n)
        vf = _original_field(s)
    out = {"verdict": verdict.to_json()}
    if verdict.kind is C.LocalKind.UNDETERMINED:
        out["text"] = f"Undetermined ({verdict.code})"
        return out
    sim = PF.simulate_local_type(vf, args.radius, args.rays, cfg.flow)
    out["oracle"] = sim
    out["agree"] = sim == verdict.kind.value
    out["text"] = f"{verdict.kind.value} ({verdict.code}); oracle {sim}"
    if not out["agree"]:
        raise Disagreement(json.dumps(out))
    return out


def cmd_simulate(cfg: RunConfig, args) -> dict:
    s = _system(cfg.input)
    vf = _original_field(s)
    tr = PF.integrate(vf, args.x0, args.y0, args.t_end, (cfg.tol_rel, cfg.tol_abs), cfg.flow)
    t, x, y = tr.samples[-1]
    out = {"t_end": t, "x": x, "y": y, "samples": len(tr.samples), "crossings": len(tr.events)}
    if args.out_data:
        PF.export_portrait([tr], args.out_data)
        out["csv"] = str(args.out_data)
    out["text"] = f"t={t:.6g} state=({x:.10g}, {y:.10g}); {len(tr.events)} section crossings"
    return out


def cmd_portrait(cfg: RunConfig, args) -> dict:
    radii = _radii(cfg, args)
    if radii:
        nf = _both_odd(cfg.input)
        vf = M.perturbed_field(nf, M.design_perturbation(nf, radii, epsilon=cfg.eps))
        lo, hi = 0.5 * min(radii), 1.5 * max(radii)
        default = [M.section_point(r, nf.l1, nf.l2) for r in np.geomspace(lo, hi, 5)]
    else:
        vf = _original_field(_system(cfg.input))
        default = list(np.geomspace(0.2, 2.0, 5))
    starts = _floats(args.starts) or default
    traces, failed = [], []
    for x0 in starts:
        try:
            traces.append(PF.orbit(vf, x0, cfg.flow))
        except PF.NoReturn:
            traces.append(PF.integrate(vf, x0, 0.0, args.t_end, (cfg.tol_rel, cfg.tol_abs), cfg.flow))
            failed.append(x0)
    cycles = []
    if args.cycles:
        search = PF.find_limit_cycles(vf, min(starts), max(starts), args.grid, cfg.flow)
        cycles = [PF.orbit(vf, c.x_fixed, cfg.flow) for c in search.cycles]
    if not args.out_data:
        raise QHError("portrait needs --data PATH for the CSV")
    svg = args.svg or str(Path(args.out_data).with_suffix(".svg"))
    PF.export_portrait(traces, args.out_data, svg, cycles)
    return {"csv": str(args.out_data), "svg": svg, "orbits": len(traces), "open_orbits": failed,
            "cycles": len(cycles), "text": f"{len(traces)} orbits, {len(cycles)} cycles -> {svg}"}


COMMANDS = {
    "classify": cmd_classify, "normal-form": cmd_normal_form, "lower-bound": cmd_lower_bound,
    "abelian": cmd_abelian, "design": cmd_design, "cycles": cmd_cycles, "center": cmd_center,
    "infinity": cmd_infinity, "local-type": cmd_local_type, "simulate": cmd_simulate,
    "portrait": cmd_portrait,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", nargs="?", help="system JSON path, '-' for stdin, or inline JSON")
    common.add_argument("--P", help="P as polynomial text")
    common.add_argument("--Q", help="Q as polynomial text")
    common.add_argument("--weights", help="p,q (default 1,1)")
    common.add_argument("--demo", choices=sorted(DEMOS))
    common.add_argument("--json", action="store_true", help="print the JSON report")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol-rel", type=float, default=1e-12)
    common.add_argument("--tol-abs", type=float, default=1e-14)
    common.add_argument("--eps", type=float, default=1e-3)
    common.add_argument("--out", help="write the JSON report here")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="semiqh", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "lower-bound":
            sp.add_argument("--pqmn", help="p,q,m,n instead of a system")
        if name == "abelian":
            sp.add_argument("--a", help="comma-separated a_1.. (defaults to the input's perturbation)")
            sp.add_argument("--b", help="comma-separated b_1..")
        if name in ("design", "cycles", "portrait"):
            sp.add_argument("--radii", help="comma-separated target radii")
        if name == "cycles":
            sp.add_argument("--rel-tol", type=float, default=0.1)
        if name in ("cycles", "portrait"):
            sp.add_argument("--grid", type=int, default=24)
        if name in ("center", "infinity"):
            sp.add_argument("--samples", type=int, default=4)
        if name == "infinity":
            sp.add_argument("--x-lo", type=float, default=10.0)
            sp.add_argument("--x-hi", type=float, default=20.0)
        if name == "local-type":
            sp.add_argument("--lam", help="lambda > 0 for x' = A, y' = lam*y + B")
            sp.add_argument("--A")
            sp.add_argument("--B")
            sp.add_argument("--order", type=int, default=40)
            sp.add_argument("--radius", type=float, default=0.05)
            sp.add_argument("--rays", type=int, default=24)
        if name in ("simulate", "portrait"):
            sp.add_argument("--data", dest="out_data", help="CSV output path")
            sp.add_argument("--t-end", type=float, default=50.0)
        if name == "simulate":
            sp.add_argument("--x0", type=float, required=True)
            sp.add_argument("--y0", type=float, default=0.0)
        if name == "portrait":
            sp.add_argument("--starts", help="comma-separated section points")
            sp.add_argument("--svg")
            sp.add_argument("--cycles", action="store_true", help="overlay detected limit cycles")
    return ap


_OPTION_KEYS = ("pqmn", "a", "b", "radii", "rel_tol", "grid", "samples", "x_lo", "x_hi", "lam", "A", "B",
                "order", "radius", "rays", "t_end", "x0", "y0", "starts", "cycles")


def _emit(report: dict, args, stream) -> None:
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, default=str) + "\n")
    if args.json:
        print(json.dumps(report, indent=2, default=str), file=stream)
    else:
        print(report.get("text", ""), file=stream)
        print(f"config {report['config_hash']}", file=stream)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        data = _load_input(args)
        options = {k: getattr(args, k) for k in _OPTION_KEYS if getattr(args, k, None) is not None}
        cfg = RunConfig(args.command, data, args.tol_rel, args.tol_abs, args.eps, args.seed, options)
        np.random.seed(cfg.seed)
        report = COMMANDS[args.command](cfg, args)
    except Disagreement as exc:
        report = json.loads(str(exc))
        report["config_hash"] = cfg.digest()
        report["status"] = "disagreement"
        _emit(report, args, sys.stdout)
        return EXIT_DISAGREE
    except (PF.FlowError, M.IllConditioned, C.SeriesOrderExhausted) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (QHError, ValueError, KeyError, OSError) as exc:
        print(f"invalid input: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report["config_hash"] = cfg.digest()
    report["status"] = "ok"
    _emit(report, args, sys.stdout)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
