"""Command-line interface.

Exit codes: 0 success, 1 a self-check failed, 2 usage or domain error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Optional, Sequence

import numpy as np

from . import critical, rayleigh, stability
from .basisfn import assoc_legendre
from .critical import CriticalRates, KreinSign
from .errors import ConfigError, DomainError, ResonanceError, SingularIntegrandError
from .rayleigh import DiscretizationConfig, Parity
from .stability import IndexCounts, Overall, SpectralPicture, StabilityReport, Verdict

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2
CSV_HEADER = ("mu", "omega", "lambda1", "dlambda_dmu", "converged")
THREADS_ENV = "ZONAL_STABILITY_THREADS"


# --------------------------------------------------------------------------
# planetary data


@dataclass(frozen=True)
class PlanetRecord:
    name: str
    radius_km: float
    spin_rad_per_s: float
    zonal_speed_m_per_s: float
    omega_nondim: float

    @property
    def omega_recomputed(self) -> float:
        return self.spin_rad_per_s * self.radius_km * 1e3 / self.zonal_speed_m_per_s


PLANETS = (
    PlanetRecord("Earth", 6371, 7.27e-5, 50, 9.26),
    PlanetRecord("Jupiter", 69911, 1.76e-4, 100, 123),
    PlanetRecord("Saturn", 58232, 1.62e-4, 100, 94.3),
    PlanetRecord("Neptune", 24622, 1.08e-4, 200, 13.2),
    PlanetRecord("Uranus", 25362, -1.04e-4, 200, -13.1),
    PlanetRecord("Pluto", 1188, -1.1e-5, 10, -1.31),
    PlanetRecord("Titan", 2576, 4.55e-6, 100, 0.11),
    PlanetRecord("HD 209458b", 94380, 2.06e-5, 1940, 1.01),
    PlanetRecord("WASP-39b", 91000, 4.05e-7, 2000, 0.01),
)

# value of one unit in the last printed digit of each tabulated omega
PRINTED_ULP = {
    "Earth": 0.01, "Jupiter": 1.0, "Saturn": 0.1, "Neptune": 0.1, "Uranus": 0.1,
    "Pluto": 0.01, "Titan": 0.01, "HD 209458b": 0.01, "WASP-39b": 0.01,
}


# --------------------------------------------------------------------------
# JSON conversion


def _cplx(z) -> Optional[list]:
    return None if z is None else [float(z.real), float(z.imag)]


def _from_cplx(v) -> Optional[complex]:
    return None if v is None else complex(v[0], v[1])


def neutral_mode_to_dict(m) -> dict:
    if isinstance(m, dict):
        # already serialized, as in a report rebuilt from JSON
        return dict(m)
    return {
        "c": m.c, "k": m.k, "omega": m.omega, "mu": m.mu,
        "dlambda_dmu": _finite(m.dlambda_dmu), "krein_sign": m.krein_sign.value,
        "boundary": m.boundary, "secondary_near_level": m.secondary_near_level,
    }


def _finite(x: float):
    return x if math.isfinite(x) else str(x)


def report_to_dict(r: StabilityReport) -> dict:
    return {
        "omega": r.omega,
        "verdict_k1": r.verdict_k1.value,
        "verdict_k2": r.verdict_k2.value,
        "overall": r.overall.value,
        "index_k1": None if r.index_k1 is None else asdict(r.index_k1),
        "index_k2": None if r.index_k2 is None else asdict(r.index_k2),
        "dim_Eu": r.dim_Eu,
        "dim_Es": r.dim_Es,
        "neutral_modes": [neutral_mode_to_dict(m) for m in r.neutral_modes],
        "rayleigh_criterion": r.rayleigh_criterion,
    }


def report_from_dict(d: dict) -> StabilityReport:
    """Rebuild a report; neutral modes come back as plain dictionaries."""
    idx = lambda v: None if v is None else IndexCounts(**v)
    return StabilityReport(
        omega=d["omega"], verdict_k1=Verdict(d["verdict_k1"]), verdict_k2=Verdict(d["verdict_k2"]),
        overall=Overall(d["overall"]), index_k1=idx(d["index_k1"]), index_k2=idx(d["index_k2"]),
        dim_Eu=d["dim_Eu"], dim_Es=d["dim_Es"], neutral_modes=tuple(d["neutral_modes"]),
        rayleigh_criterion=d["rayleigh_criterion"],
    )


def picture_to_dict(p: SpectralPicture) -> dict:
    return {
        "k": p.k,
        "omega": p.omega,
        "essential_interval": [_cplx(z) for z in p.essential_interval],
        "embedded": _cplx(p.embedded_eigenvalue),
        "isolated": [_cplx(z) for z in p.isolated_imaginary],
        "rotational_pair": None if p.rotational_pair is None else [_cplx(z) for z in p.rotational_pair],
        "rotational_kernel_flag": p.rotational_kernel_flag,
        "rotational_eigenfunction": p.rotational_eigenfunction,
        "edge": [_cplx(z) for z in p.edge_eigenvalues],
        "unstable_count": p.unstable_count,
        "unstable": [_cplx(z) for z in p.unstable_eigenvalues],
    }


def picture_from_dict(d: dict) -> SpectralPicture:
    pair = d["rotational_pair"]
    return SpectralPicture(
        k=d["k"], omega=d["omega"],
        essential_interval=tuple(_from_cplx(z) for z in d["essential_interval"]),
        embedded_eigenvalue=_from_cplx(d["embedded"]),
        isolated_imaginary=tuple(_from_cplx(z) for z in d["isolated"]),
        rotational_pair=None if pair is None else tuple(_from_cplx(z) for z in pair),
        unstable_count=d["unstable_count"],
        rotational_kernel_flag=d["rotational_kernel_flag"],
        edge_eigenvalues=tuple(_from_cplx(z) for z in d["edge"]),
        unstable_eigenvalues=tuple(_from_cplx(z) for z in d["unstable"]),
        rotational_eigenfunction=d["rotational_eigenfunction"],
    )


def rates_to_dict(r: CriticalRates) -> dict:
    d = asdict(r)
    d["negative_k2_bracket"] = list(r.negative_k2_bracket)
    return d


def rates_from_dict(d: dict) -> CriticalRates:
    d = dict(d)
    d["negative_k2_bracket"] = tuple(d["negative_k2_bracket"])
    return CriticalRates(**d)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


# --------------------------------------------------------------------------
# configuration


def load_config_file(path: str) -> dict:
    """Read ``key=value`` lines; blank lines and ``#`` comments are ignored."""
    known = {f.name: f.type for f in fields(DiscretizationConfig)}
    out: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (x.strip() for x in line.split("=", 1))
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key == "convergence_tol":
                out[key] = float(value)
            elif value.lower() in ("none", ""):
                out[key] = None
            else:
                out[key] = int(value)
    return out


def build_config(args) -> DiscretizationConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    for key in ("basis_size", "quadrature_nodes", "convergence_tol", "max_refinements"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return DiscretizationConfig(**values)


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if n < 0:
        raise ConfigError(f"{THREADS_ENV} must be non-negative")
    return n or (os.cpu_count() or 1)


def _parallel_map(fn, items):
    n = thread_count()
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def parse_grid(text: str) -> list[float]:
    """Parse ``a:b:step`` into the inclusive grid a, a+step, ..., b."""
    parts = text.split(":")
    if len(parts) != 3:
        raise DomainError("mu grid must be given as start:stop:step")
    a, b, h = (float(p) for p in parts)
    if not h > 0:
        raise DomainError("grid step must be positive")
    if b < a:
        return []
    n = int(math.floor((b - a) / h + 1e-9)) + 1
    return [round(a + i * h, 12) for i in range(n)]


# --------------------------------------------------------------------------
# commands


def _verdict_line(r: StabilityReport) -> str:
    if r.rayleigh_criterion:
        return "spectrally stable (Rayleigh criterion)"
    if r.overall is Overall.SPECTRALLY_STABLE:
        return "spectrally stable"
    modes = " and ".join(f"k={k}" for k in r.unstable_modes)
    return f"linearly unstable ({modes})"


def cmd_classify(args, out) -> int:
    report = stability.classify(args.omega, build_config(args))
    if args.json:
        out.write(_dump(report_to_dict(report)) + "\n")
        return EXIT_OK
    out.write(f"omega = {report.omega:g}: {_verdict_line(report)}\n")
    out.write(f"  k=1: {report.verdict_k1.value}   k=2: {report.verdict_k2.value}\n")
    out.write(f"  dim E^u = dim E^s = {report.dim_Eu}\n")
    for m in report.neutral_modes:
        out.write(f"  neutral mode k={m.k} mu={m.mu:.10g} c={m.c:.10g} Krein {m.krein_sign.value}\n")
    return EXIT_OK


def _fmt(x: float) -> str:
    return repr(float(x)) if math.isfinite(x) else "nan"


def cmd_curve(args, out) -> int:
    config = build_config(args)
    grid = parse_grid(args.mu)
    parity = Parity(args.parity) if args.parity else rayleigh.default_parity(args.k)
    rows = _parallel_map(
        lambda mu: rayleigh.eigenvalue_curve(args.k, parity, args.omega, [mu], config)[0], grid)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([_fmt(r.mu), _fmt(r.omega), _fmt(r.lambda1), _fmt(r.dlambda_dmu),
                         "true" if r.converged else "false"])
    text = buf.getvalue()
    if args.out and args.out != "-":
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_critical(args, out) -> int:
    config = build_config(args)
    mode = args.mode
    if mode in ("all", "k2-"):
        rates = critical.critical_rates(config)
    else:
        nan = math.nan
        rates = CriticalRates(99 / 2, 69 / 2, -3.0, nan, 99 / 2, nan, ())
    values = {
        "k1+": ("positive_k1", "99/2", rates.positive_k1),
        "k2+": ("positive_k2", "69/2", rates.positive_k2),
        "k1-": ("negative_k1", "-3", rates.negative_k1),
        "k2-": ("negative_k2", "g^-1(-12)", rates.negative_k2),
    }
    if args.json:
        if mode == "all":
            out.write(_dump(rates_to_dict(rates)) + "\n")
        else:
            name, _, v = values[mode]
            payload = {name: v}
            if mode == "k2-":
                payload["negative_k2_bracket"] = list(rates.negative_k2_bracket)
            out.write(_dump(payload) + "\n")
        return EXIT_OK
    for key in (values if mode == "all" else [mode]):
        name, label, v = values[key]
        if key == "k2-":
            lo, hi = rates.negative_k2_bracket
            out.write(f"{name:12s} {label:>10s} = {v:.9f}  (bracket [{lo:.9f}, {hi:.9f}])\n")
        else:
            out.write(f"{name:12s} {label:>10s} = {v:g}\n")
    if mode == "all":
        out.write(f"unstable band: ({rates.overall_negative:.6f}, {rates.overall_positive:g})\n")
    return EXIT_OK


def cmd_spectrum(args, out) -> int:
    if args.k == 0:
        raise DomainError("k must be nonzero")
    pic = stability.spectral_picture(args.k, args.omega, build_config(args))
    d = picture_to_dict(pic)
    if args.json:
        out.write(_dump(d) + "\n")
        return EXIT_OK
    fmt = lambda z: f"{z.imag:+.6g}i" if abs(z.real) < 1e-15 else f"{z.real:.6g}{z.imag:+.6g}i"
    lo, hi = pic.essential_interval
    out.write(f"k={pic.k} omega={pic.omega:g}\n")
    out.write(f"  essential spectrum: [{fmt(lo)}, {fmt(hi)}]\n")
    out.write(f"  embedded eigenvalue: {fmt(pic.embedded_eigenvalue) if pic.embedded_eigenvalue is not None else 'none'}\n")
    out.write(f"  isolated imaginary: {', '.join(fmt(z) for z in pic.isolated_imaginary) or 'none'}\n")
    if pic.rotational_pair:
        out.write(f"  rotational pair: {fmt(pic.rotational_pair[0])}, {fmt(pic.rotational_pair[1])}\n")
    elif pic.rotational_kernel_flag:
        out.write("  rotational pair: merged into the generalized kernel (omega = 0)\n")
    out.write(f"  unstable pairs: {pic.unstable_count}\n")
    return EXIT_OK


def cmd_planets(args, out) -> int:
    config = build_config(args)
    reports = _parallel_map(lambda p: stability.classify(p.omega_recomputed, config), list(PLANETS))
    if args.json:
        rows = []
        for p, r in zip(PLANETS, reports):
            d = asdict(p)
            d["omega_recomputed"] = p.omega_recomputed
            d["verdict"] = r.overall.value
            rows.append(d)
        out.write(_dump(rows) + "\n")
        return EXIT_OK
    out.write(f"{'body':12s} {'R (km)':>8s} {'spin (rad/s)':>13s} {'U (m/s)':>8s} "
              f"{'omega':>7s} {'recomputed':>11s}  verdict\n")
    for p, r in zip(PLANETS, reports):
        out.write(f"{p.name:12s} {p.radius_km:8g} {p.spin_rad_per_s:13.3g} "
                  f"{p.zonal_speed_m_per_s:8g} {p.omega_nondim:7g} {p.omega_recomputed:11.4g}  "
                  f"{_verdict_line(r)}\n")
    return EXIT_OK


def selfcheck_items() -> list[tuple[str, float, float, float]]:
    """(name, computed, target, tolerance) for the closed-form anchors."""
    a12, a3 = rayleigh.analytic_lambda_at_mu_minus12, rayleigh.analytic_lambda_at_mu3
    items = [
        ("lambda1(-12, 99/2)", a12(1, 49.5)[0], -12.0, 1e-12),
        ("lambda1(-12, 12)", a12(1, 12.0)[0], -20.0, 1e-12),
        ("lambda1(-12, 72)", a12(1, 72.0)[0], -6.0, 1e-12),
        ("tilde lambda1(-12, 69/2)", a12(2, 34.5)[0], -12.0, 1e-12),
        ("lambda1(3, -3)", a3(1, -3.0)[0], -12.0, 1e-12),
        ("lambda1(3, -18)", a3(1, -18.0)[0], -6.0, 1e-12),
        ("tilde lambda1(3, -3)", a3(2, -3.0)[0], -20.0, 1e-12),
        ("tilde lambda1(3, -18)", a3(2, -18.0)[0], -6.0, 1e-12),
        ("energy form, P_3^2 at omega=99/2",
         stability.energy_form(37.5, 1, 49.5, lambda s: assoc_legendre(3, 2, s)), -67.5, 1e-8),
        ("energy form, P_3^3 at omega=69/2",
         stability.energy_form(22.5, 2, 34.5, lambda s: assoc_legendre(3, 3, s)), -575.0, 1e-8),
        ("energy form, sign(s)s^2(1-s^2)^(1/2) at omega=-3",
         stability.energy_form(0.0, 1, -3.0,
                               lambda s: np.sign(s) * s * s * np.sqrt(1.0 - s * s)),
         -4.0 / 45.0, 1e-8),
    ]
    mode = rayleigh.ModeSpec.standard(1, 60.0, -12.0 - 1e-4)
    items.append(("numeric lambda1(-12-1e-4, 60) vs closed form",
                  rayleigh.principal_eigenvalue(mode).eigenvalue, a12(1, 60.0)[0], 1e-2))
    return items


def cmd_selfcheck(args, out) -> int:
    failures = 0
    for name, got, want, tol in selfcheck_items():
        delta = abs(got - want)
        ok = delta <= tol
        failures += not ok
        out.write(f"{'PASS' if ok else 'FAIL'}  {name:52s} got {got:+.12g}  target {want:+.12g}  "
                  f"delta {delta:.2e}\n")
    out.write(f"{'all checks passed' if not failures else f'{failures} check(s) failed'}\n")
    return EXIT_OK if not failures else EXIT_CHECK_FAILED


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("discretization")
    g.add_argument("--config", help="file of key=value lines (DiscretizationConfig fields)")
    g.add_argument("--basis-size", dest="basis_size", type=int)
    g.add_argument("--quadrature-nodes", dest="quadrature_nodes", type=int)
    g.add_argument("--convergence-tol", dest="convergence_tol", type=float)
    g.add_argument("--max-refinements", dest="max_refinements", type=int)

    p = argparse.ArgumentParser(prog="zonal-stability",
                                description="Linear stability of the 3-jet on a rotating sphere.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", parents=[common], help="stability verdict at one omega")
    c.add_argument("--omega", type=float, required=True)
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_classify)

    c = sub.add_parser("curve", parents=[common], help="principal eigenvalue along a mu grid (CSV)")
    c.add_argument("--k", type=int, required=True, choices=[1, 2])
    c.add_argument("--omega", type=float, required=True)
    c.add_argument("--mu", required=True, help="start:stop:step, inclusive")
    c.add_argument("--parity", choices=["odd", "even"])
    c.add_argument("--out", help="output path (default: standard output)")
    c.set_defaults(func=cmd_curve)

    c = sub.add_parser("critical", parents=[common], help="critical rotation rates")
    c.add_argument("--mode", choices=["all", "k1+", "k2+", "k1-", "k2-"], default="all")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_critical)

    c = sub.add_parser("spectrum", parents=[common], help="spectral picture for mode k")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--omega", type=float, required=True)
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_spectrum)

    c = sub.add_parser("planets", parents=[common], help="tabulated bodies with verdicts")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_planets)

    c = sub.add_parser("selfcheck", parents=[common], help="closed-form cross-checks")
    c.set_defaults(func=cmd_selfcheck)
    return p


def _join_mu_grid(argv: list[str]) -> list[str]:
    """Attach the value to --mu: grids such as "-30:-13:0.5" start with a
    dash and would otherwise be taken for an option."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        if argv[i] == "--mu" and i + 1 < len(argv):
            out.append(f"--mu={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    argv = _join_mu_grid(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if hasattr(args, "omega") and not math.isfinite(args.omega):
        sys.stderr.write("error: omega must be finite\n")
        return EXIT_USAGE
    try:
        return args.func(args, out)
    except (DomainError, ConfigError, ResonanceError, SingularIntegrandError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
