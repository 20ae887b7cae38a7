"""Command-line front end.

Every subcommand builds a ``RunConfig`` from the parsed arguments (and an
optional ``--config`` JSON file supplying defaults), evaluates its grid in a
thread pool with an order-preserving map, and writes CSV or JSON.  CSV
floats carry 17 significant digits and the file starts with a comment line
embedding the RunConfig, so identical configs give byte-identical files.

Exit codes: 0 ok, 1 numerical failure, 2 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import feynman as fey
from .dos import dos_resonance_approx, local_dos, unit_weight_integral
from .errors import InvalidProfile, QnmError
from .greens import retarded_green_exact, retarded_green_qnm, retarded_green_qnm_time
from .profiles import CavityProfile, validate
from .quantization import ForceSignal, driven_mode_response
from .series import SeriesConfig
from .spectrum import SearchWindow, build_spectrum, find_qnm_frequencies, modes_from_frequencies, \
    norm_residual
from .thermal import (ThermalState, correlator_closed_rod, correlator_diagonal,
                      correlator_nondiagonal, correlator_realtime, subtracted_correlator)
from .verify import run_task, suite_tasks

log = logging.getLogger("qnmfield")

EXIT_OK, EXIT_NUMERICAL, EXIT_INPUT = 0, 1, 2
DEFAULT_PROFILE = "rod:5,1,1"
DEFAULT_BETAS = "0.5,1,2"


class InputError(ValueError):
    """Bad command-line input; reported with exit code 2."""


@dataclass
class RunConfig:
    """Everything that determines a run's output.

    ``threads`` only changes scheduling, never results, so it is left out of
    the provenance record.
    """

    command: str
    profile: str
    params: dict
    out: str = "-"
    format: str = "csv"
    threads: int = 1
    series: dict = field(default_factory=dict)

    def record(self) -> dict:
        return {"command": self.command, "profile": self.profile, "params": self.params,
                "format": self.format, "series": self.series}

    def header(self) -> str:
        return "# qnmfield " + json.dumps(self.record(), sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# parsing helpers

def parse_profile(spec: str) -> CavityProfile:
    """Profile from ``rod:n,n0,a``, inline JSON or a JSON file, validated.

    Raises ``InvalidProfile`` whose message lists every violation.
    """
    spec = spec.strip()
    try:
        if spec.startswith("rod:"):
            parts = [float(p) for p in spec[4:].split(",") if p.strip()]
            data = {"rod": dict(zip(("n", "n0", "a"), parts))}
        elif spec.startswith("{"):
            data = json.loads(spec)
        else:
            with open(spec) as fh:
                data = json.load(fh)
        if "rod" in data:
            rod = data["rod"]
            n, n0, a = float(rod["n"]), float(rod.get("n0", 1.0)), float(rod.get("a", 1.0))
            if not (n > 0 and n0 > 0):
                raise InvalidProfile("NonPositiveDensity")
            profile = CavityProfile((0.0,), (n * n,), a, n0 * n0, checked=False)
        else:
            segs = data["segments"]
            profile = CavityProfile(tuple(s["x0"] for s in segs), tuple(s["rho"] for s in segs),
                                    data["a"], data.get("rho_out", 1.0), checked=False)
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read profile {spec!r}: {exc}") from exc
    problems = validate(profile)
    if problems:
        raise InvalidProfile(", ".join(problems))
    return CavityProfile(profile.edges, profile.densities, profile.a, profile.rho_out)


def parse_grid(text: str) -> np.ndarray:
    """``lo:hi:n`` (inclusive linspace) or a comma list."""
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            return np.linspace(float(lo), float(hi), int(n))
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise InputError(f"bad grid {text!r}") from exc


def parse_beta(text) -> float:
    t = str(text).strip().lower()
    if t in ("inf", "infinity", "∞"):
        return np.inf
    b = float(t)
    if not b > 0:
        raise InputError("beta must be positive")
    return b


def fmt(v) -> str:
    v = float(v)
    if np.isnan(v):
        return "nan"
    if np.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def pmap(func, items, threads):
    """Order-preserving map; results are identical for any thread count."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def series_config(args) -> SeriesConfig:
    return SeriesConfig(qnm_terms=None, matsubara_terms=int(getattr(args, "matsubara", 4000)))


# ---------------------------------------------------------------------------
# output

def write_table(cfg: RunConfig, columns, rows, stream=None):
    if cfg.format == "json":
        data = {"config": cfg.record(), "columns": list(columns),
                "rows": [[float(v) for v in r] for r in rows]}
        return write_json(cfg, data, stream)
    buf = io.StringIO()
    buf.write(cfg.header() + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    _emit(cfg, buf.getvalue(), stream)


def write_json(cfg: RunConfig, data, stream=None):
    _emit(cfg, json.dumps(data, sort_keys=True, indent=2, default=_jsonable) + "\n", stream)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, complex):
        return [v.real, v.imag]
    raise TypeError(type(v))


def _emit(cfg, text, stream):
    if stream is not None:
        stream.write(text)
    elif cfg.out in ("-", "csv", "json"):
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# subcommands

def cmd_spectrum(args, cfg):
    profile = parse_profile(args.profile)
    n = args.jmax + 1
    spacing = np.pi / profile.optical_length
    re_max = (n + 0.9) * spacing
    freqs = []
    for _ in range(8):
        freqs = find_qnm_frequencies(profile, SearchWindow(re_max, tol=args.tol))
        if len(freqs) >= n:
            break
        re_max *= 1.5
    sp = modes_from_frequencies(profile, freqs[:n])
    modes = sorted(sp.ordered, key=lambda m: m.index)
    rows = pmap(lambda m: (m.index, m.omega.real, m.omega.imag, m.surface_value.real,
                           m.surface_value.imag, norm_residual(m)), modes, cfg.threads)
    write_table(cfg, ("j", "re_omega", "im_omega", "f_a_re", "f_a_im", "norm_residual"), rows)


def _points(args, names):
    """Cartesian grid over the named arguments (each a grid string)."""
    grids = [parse_grid(str(getattr(args, nm))) for nm in names]
    mesh = np.meshgrid(*grids, indexing="ij")
    return list(zip(*(m.ravel() for m in mesh)))


def cmd_greens(args, cfg):
    profile = parse_profile(args.profile)
    if (args.omega is None) == (args.t is None):
        raise InputError("give exactly one of --omega or --t")
    var = "omega" if args.omega is not None else "t"
    sp = build_spectrum(profile, args.nterms) if args.method == "qnm" else None
    if var == "t" and args.method == "exact":
        raise InputError("--t needs --method qnm")
    conf = SeriesConfig(qnm_terms=args.nterms)

    def one(p):
        x, y, v = p
        if args.method == "exact":
            return (x, y, v, *_cplx(retarded_green_exact(profile, x, y, v)), 0.0)
        r = (retarded_green_qnm(sp, x, y, v, conf) if var == "omega"
             else retarded_green_qnm_time(sp, x, y, v, conf))
        return (x, y, v, *_cplx(r.value), r.tail_estimate)

    rows = pmap(one, _points(args, ("x", "y", var)), cfg.threads)
    write_table(cfg, ("x", "y", var, "re", "im", "tail_estimate"), rows)


def _cplx(v):
    v = complex(v)
    return v.real, v.imag


def cmd_correlate(args, cfg):
    profile = parse_profile(args.profile)
    thermal = ThermalState(parse_beta(args.beta))
    time_forms = ("realtime", "subtracted")
    var = "t" if args.form in time_forms else "omega"
    if getattr(args, var) is None:
        raise InputError(f"form {args.form!r} needs --{var}")
    conf = SeriesConfig(qnm_terms=args.nterms, matsubara_terms=args.matsubara)
    sp = None if args.form == "closed" else build_spectrum(profile, args.nterms)
    if args.form == "closed" and len(profile.edges) != 1:
        raise InputError("closed form needs a rod profile")

    def one(p):
        x, y, v = p
        if args.form == "closed":
            return (x, y, v, correlator_closed_rod(profile, x, y, v, thermal), 0.0, 0.0)
        if args.form == "realtime":
            return (x, y, v, *_cplx(correlator_realtime(sp, x, y, v, thermal, conf)), 0.0)
        fn = {"diagonal": correlator_diagonal, "nondiagonal": correlator_nondiagonal,
              "subtracted": subtracted_correlator}[args.form]
        r = fn(sp, x, y, v, thermal, conf)
        return (x, y, v, *_cplx(r.value), r.tail_estimate)

    rows = pmap(one, _points(args, ("x", "y", var)), cfg.threads)
    write_table(cfg, ("x", "y", var, "re", "im", "tail_estimate"), rows)


def cmd_dos(args, cfg):
    profile = parse_profile(args.profile)
    if args.unit_weight:
        sp = build_spectrum(profile, args.j + 3)
        uw = unit_weight_integral(sp, args.j)
        return write_json(cfg, uw.to_dict())
    omegas = parse_grid(args.omega_range)
    xs = parse_grid(str(args.x))
    if args.source == "exact":
        sp = profile
    else:
        sp = build_spectrum(profile, max(args.nterms, args.j + 1))
    conf = SeriesConfig(qnm_terms=args.nterms)

    def one(p):
        x, w = p
        if args.source == "lorentzian":
            return (x, w, float(dos_resonance_approx("lorentzian", sp[args.j], x, w)))
        return (x, w, local_dos(args.source, sp, x, w, conf))

    pts = [(x, w) for x in xs for w in omegas]
    rows = pmap(one, pts, cfg.threads)
    write_table(cfg, ("x", "omega", "dos"), rows)


def cmd_propagator(args, cfg):
    profile = parse_profile(args.profile)
    omegas = parse_grid(args.omega_range)
    qnm = args.form in ("nondiagonal", "diagonal", "diagonal_alt")
    sp = build_spectrum(profile, args.nterms) if (qnm or args.check) else profile
    if args.check:
        conf = SeriesConfig(qnm_terms=args.nterms)
        mode = sp[args.j]
        kind = {"ra": "ra", "ra_prime": "ra_prime"}.get(args.check)
        if kind is None:
            raise InputError("--check takes ra or ra_prime")
        x = float(parse_grid(str(args.x))[0])
        res = pmap(lambda w: fey.check_retarded_advanced(kind, sp, x, w, conf, mode=mode),
                   [w for w in omegas if w > 0], cfg.threads)
        ims = [float(np.imag(fey.resonance_approx_D(kind, mode, x, w))) for w in omegas]
        data = {"form": kind, "j": args.j, "x": x, "points": len(res),
                "max_ra_residual": max(res) if res else 0.0,
                "max_imag": max(ims) if ims else 0.0,
                "consistent": bool(max(res, default=0.0) < 1e-12 and max(ims, default=0.0) <= 0)}
        return write_json(cfg, data)
    if args.form == "closed_rod" and len(profile.edges) != 1:
        raise InputError("closed_rod needs a rod profile")
    system = profile if args.form in ("closed_rod", "exact") else sp
    conf = SeriesConfig(qnm_terms=args.nterms)

    def one(p):
        x, y, w = p
        v = fey.feynman(args.form, system, x, y, w, conf)
        tail = getattr(v, "tail_estimate", 0.0)
        return (x, y, w, *_cplx(getattr(v, "value", v)), tail)

    pts = [(x, y, w) for x in parse_grid(str(args.x)) for y in parse_grid(str(args.y))
           for w in omegas]
    rows = pmap(one, pts, cfg.threads)
    write_table(cfg, ("x", "y", "omega", "re", "im", "tail_estimate"), rows)


def read_force(path) -> ForceSignal:
    """CSV with columns ``t, re[, im]`` on a uniform time grid (``#`` comments allowed)."""
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2,
                          skiprows=_header_rows(path))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read force file: {exc}") from exc
    t = data[:, 0]
    b = data[:, 1] + (1j * data[:, 2] if data.shape[1] > 2 else 0)
    if t.size < 2:
        raise InputError("force signal needs at least two samples")
    dt = np.diff(t)
    if np.max(np.abs(dt - dt[0])) > 1e-9 * max(abs(dt[0]), 1.0):
        raise InputError("force samples must be uniformly spaced")
    return ForceSignal(float(dt[0]), b, float(t[0]))


def _header_rows(path):
    with open(path) as fh:
        n = 0
        for line in fh:
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            try:
                float(s.split(",")[0])
                return n
            except ValueError:
                n += 1
                return n
    return 0


def cmd_drive(args, cfg):
    profile = parse_profile(args.profile)
    sp = build_spectrum(profile, abs(args.j) + 1)
    force = read_force(args.force)
    a0 = complex(*(float(v) for v in args.a0.split(","))) if "," in args.a0 else complex(float(args.a0))
    res = driven_mode_response(sp[args.j], force, a0)
    log.info("ODE residual %.3g", res.residual)
    rows = [(t, a.real, a.imag) for t, a in zip(res.t, res.a)]
    write_table(cfg, ("t", "re", "im"), rows)


def cmd_oracle(args, cfg):
    from .thermal import correlator_exact
    from .universe import UniverseConfig, UniverseModes, mu_correlator, mu_dos
    try:
        n, n0, a = (float(v) for v in args.rod.split(","))
    except ValueError as exc:
        raise InputError("--rod takes n,n0,a") from exc
    profile = parse_profile(f"rod:{n},{n0},{a}")
    ucfg = UniverseConfig(args.Lambda, mode_count=args.modes)
    um = UniverseModes(profile, ucfg)
    x, w = float(args.x), float(args.omega)
    if args.compare == "correlator":
        th = ThermalState(parse_beta(args.beta))
        mu = mu_correlator(profile, ucfg, x, x, w, th, modes=um)
        ref = float(np.real(correlator_exact(profile, x, x, w, th)))
    else:
        mu = mu_dos(profile, ucfg, x, w, modes=um)
        ref = float(local_dos("exact", profile, x, w))
    write_json(cfg, {"quantity": args.compare, "qnm_value": ref, "mu_value": mu,
                     "rel_err": abs(mu - ref) / abs(ref)})


def figure_data(profile, betas, n_pairs=200, threads=1):
    """Rows for the two equal-space correlation figures.

    Returns ``(fig1_rows, fig2_rows)``: ``F_S(x, x, 0.1)`` on 201 ``x`` in
    ``[0, a]`` and ``F_S(0.3, 0.3, t)`` on 400 ``t`` in ``(0, 2]``, one column
    per inverse temperature.
    """
    sp = build_spectrum(profile, n_pairs)
    states = [ThermalState(b) for b in betas]
    xs = np.linspace(0.0, profile.a, 201)
    ts = 2.0 * np.arange(1, 401) / 400

    def f1(x):
        return (x, *(subtracted_correlator(sp, x, x, 0.1, th).value for th in states))

    def f2(t):
        return (t, *(subtracted_correlator(sp, 0.3 * profile.a, 0.3 * profile.a, t, th).value
                     for th in states))

    return pmap(f1, xs, threads), pmap(f2, ts, threads)


def cmd_figures(args, cfg):
    profile = parse_profile(args.profile)
    betas = [parse_beta(b) for b in str(args.beta).split(",")]
    out_dir = args.out_dir or (cfg.out if cfg.out not in ("-", "csv", "json") else ".")
    os.makedirs(out_dir, exist_ok=True)
    fig1, fig2 = figure_data(profile, betas, args.nterms, cfg.threads)
    names = [f"beta={fmt(b)}" for b in betas]
    for fname, col, rows in (("fig1.csv", "x", fig1), ("fig2.csv", "t", fig2)):
        sub = RunConfig(cfg.command, cfg.profile, dict(cfg.params, file=fname), format="csv")
        with open(os.path.join(out_dir, fname), "w", newline="") as fh:
            write_table(sub, (col, *names), rows, stream=fh)


def cmd_verify(args, cfg):
    try:
        profile = parse_profile(args.profile)
    except InvalidProfile as exc:
        write_json(cfg, {"config": cfg.record(), "profile_violations": str(exc).split(", "),
                         "pass": False})
        return EXIT_INPUT
    suite = "all" if args.all else ("commutators" if args.commutators else args.suite)
    tasks = suite_tasks(suite)
    results = pmap(lambda t: run_task(t, profile, args.jmax), tasks, cfg.threads)
    checks = [dict(c.to_dict(), suite=s) for group in results for s, c in group]
    ok = all(c["pass"] for c in checks)
    write_json(cfg, {"config": cfg.record(), "checks": checks, "pass": ok})
    return EXIT_OK if ok else EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# argument parser

def _common(p):
    p.add_argument("--profile", default=DEFAULT_PROFILE,
                   help="rod:n,n0,a, inline JSON or a JSON file (default %(default)s)")
    p.add_argument("--config", help="JSON file with default values for any option")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qnmfield", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="QNM frequencies and surface values")
    _common(p)
    p.add_argument("--jmax", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("greens", help="retarded Green's function")
    _common(p)
    p.add_argument("--x", default="0.5")
    p.add_argument("--y", default="0.5")
    p.add_argument("--omega")
    p.add_argument("--t")
    p.add_argument("--method", choices=("exact", "qnm"), default="exact")
    p.add_argument("--nterms", type=int, default=200)
    p.set_defaults(func=cmd_greens)

    p = sub.add_parser("correlate", help="thermal correlation functions")
    _common(p)
    p.add_argument("--beta", default="1")
    p.add_argument("--form", choices=("diagonal", "nondiagonal", "closed", "realtime", "subtracted"),
                   default="diagonal")
    p.add_argument("--x", default="0.5")
    p.add_argument("--y", default="0.5")
    p.add_argument("--omega")
    p.add_argument("--t")
    p.add_argument("--nterms", type=int, default=200)
    p.add_argument("--matsubara", type=int, default=4000)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("dos", help="local density of states")
    _common(p)
    p.add_argument("--x", default="0.5")
    p.add_argument("--omega-range", default="0.1:10:100")
    p.add_argument("--source", choices=("exact", "diagonal", "nondiagonal", "lorentzian"),
                   default="exact")
    p.add_argument("--j", type=int, default=0)
    p.add_argument("--nterms", type=int, default=200)
    p.add_argument("--unit-weight", action="store_true")
    p.set_defaults(func=cmd_dos)

    p = sub.add_parser("propagator", help="zero-temperature Feynman propagator")
    _common(p)
    p.add_argument("--form", choices=fey.FORMS, default="exact")
    p.add_argument("--x", default="0.5")
    p.add_argument("--y", default="0.5")
    p.add_argument("--omega-range", default="0.1:10:100")
    p.add_argument("--nterms", type=int, default=200)
    p.add_argument("--check", choices=("ra", "ra_prime"))
    p.add_argument("--j", type=int, default=0)
    p.set_defaults(func=cmd_propagator)

    p = sub.add_parser("drive", help="driven QNM amplitude a_j(t)")
    _common(p)
    p.add_argument("--force", required=True, help="CSV with columns t, re[, im]")
    p.add_argument("--j", type=int, default=0)
    p.add_argument("--a0", default="0,0")
    p.set_defaults(func=cmd_drive)

    p = sub.add_parser("oracle", help="compare against the modes-of-the-universe oracle")
    _common(p)
    p.add_argument("--rod", default="5,1,1")
    p.add_argument("--Lambda", type=float, default=200.0)
    p.add_argument("--modes", type=int, default=2000)
    p.add_argument("--compare", choices=("correlator", "dos"), default="correlator")
    p.add_argument("--x", default="0.5")
    p.add_argument("--omega", default="1.5")
    p.add_argument("--beta", default="1")
    p.set_defaults(func=cmd_oracle, format="json")

    p = sub.add_parser("figures", help="data for the equal-space correlation figures")
    _common(p)
    p.add_argument("--beta", default=DEFAULT_BETAS, help="comma list; 'inf' allowed")
    p.add_argument("--out-dir")
    p.add_argument("--nterms", type=int, default=200)
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("verify", help="run invariant suites, JSON report")
    _common(p)
    p.add_argument("--suite", choices=("all", "identities", "commutators", "oracle"), default="all")
    p.add_argument("--all", action="store_true", help="same as --suite all")
    p.add_argument("--commutators", action="store_true", help="same as --suite commutators")
    p.add_argument("--jmax", type=int, default=8)
    p.set_defaults(func=cmd_verify, format="json")
    return parser


def _apply_config_file(parser, argv):
    """Re-parse with defaults taken from ``--config``; unknown keys are rejected."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            overrides = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config: {exc}") from exc
    if not isinstance(overrides, dict):
        raise InputError("config must be a JSON object")
    known = set(vars(args))
    bad = sorted(k for k in overrides if k.replace("-", "_") not in known)
    if bad:
        raise InputError(f"unknown config keys: {bad}")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    sub.set_defaults(**{k.replace("-", "_"): v for k, v in overrides.items()})
    return parser.parse_args(argv)


def _run_config(args) -> RunConfig:
    skip = {"func", "config", "threads", "out", "format", "command", "profile", "verbose"}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    fmt_ = args.format
    if args.out in ("csv", "json"):
        fmt_ = args.out
    elif fmt_ is None:
        fmt_ = "json" if str(args.out).endswith(".json") else "csv"
    series = {k: params[k] for k in ("nterms", "matsubara") if k in params}
    return RunConfig(args.command, args.profile, params, args.out, fmt_, max(1, args.threads), series)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config_file(parser, argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # argparse usage errors
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = _run_config(args)
    try:
        code = args.func(args, cfg)
    except InvalidProfile as exc:
        print(f"invalid profile: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except QnmError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InputError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK if code is None else int(code)


if __name__ == "__main__":
    sys.exit(main())
