"""Command-line front end.  Every artifact starts with a header echoing the version, the
full configuration, the seed and the tail bounds, so reruns are bit-identical.

Exit codes: 0 success, 1 usage, 2 budget or precision failure, 3 a check did not hold.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from . import diffraction as dfr
from . import nonhyper, padic, pointset, suspension
from .errors import BudgetError, CheckFailed, PrecisionError, QCSError
from .lattice import alpha_repellence_scan, beta_repellence_scan, dual_basis, lattice_from_dict
from .window import window_from_dict

EXIT_OK, EXIT_USAGE, EXIT_BUDGET, EXIT_CHECK = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# parsing helpers


def parse_number(text):
    """'sqrt2' or 'sqrt(2)' -> float root, '1/3' or '0.3' -> exact Fraction."""
    t = text.strip().replace(" ", "")
    if t.startswith("sqrt"):
        inner = t[4:].strip("()")
        return math.sqrt(float(Fraction(inner)))
    try:
        return Fraction(t)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None


def parse_grid(text):
    """'lo:hi:logN' (N log-spaced points), 'lo:hi:linN', or a comma list.  Returned in the
    order written for lists; ranges come out largest first."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"bad grid {text!r}")
        a, b = float(parse_number(parts[0])), float(parse_number(parts[1]))
        mode = parts[2]
        try:
            n = int(mode[3:])
        except ValueError:
            raise UsageError(f"bad grid {text!r}") from None
        if n < 1:
            raise UsageError(f"bad grid {text!r}")
        hi, lo = max(a, b), min(a, b)
        if mode.startswith("log"):
            if lo <= 0:
                raise UsageError("log grid needs positive endpoints")
            return [float(v) for v in np.geomspace(hi, lo, n)]
        if mode.startswith("lin"):
            return [float(v) for v in np.linspace(hi, lo, n)]
        raise UsageError(f"bad grid {text!r}")
    return [float(parse_number(v)) for v in text.split(",") if v.strip()]


def scheme_from_preset(preset):
    name, _, arg = preset.partition(":")
    args = [a for a in arg.split(",") if a] if arg else []
    try:
        if name == "fibonacci":
            return dfr.fibonacci_scheme()
        if name == "z2":
            return dfr.z2_scheme()
        if name == "quadratic":
            D = int(args[0])
            b = parse_number(args[1]) if len(args) > 1 else 0.3
            return dfr.quadratic_scheme(D, b)
        if name == "gamma_a":
            return dfr.gamma_a_scheme(parse_number(args[0]), parse_number(args[1]))
        if name == "poisson":
            lam = float(parse_number(args[0])) if args else 1.0
            d = int(args[1]) if len(args) > 1 else 1
            return pointset.PoissonProcess(lam, d)
    except (IndexError, ValueError) as exc:
        raise UsageError(f"bad preset {preset!r}: {exc}") from None
    raise UsageError(f"unknown preset {preset!r}")


def scheme_from_json(text):
    try:
        d = json.loads(text)
        return dfr.Scheme(lattice_from_dict(d["lattice"]), window_from_dict(d["window"]), d.get("label", "json"))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad scheme JSON: {exc}") from None


def resolve_scheme(args, default="fibonacci"):
    if args.scheme_json:
        return scheme_from_json(args.scheme_json)
    return scheme_from_preset(args.preset or default)


def _preset_value(args, name):
    """The argument of a 'name:value' preset, if that is what was given."""
    if args.preset and args.preset.startswith(name + ":"):
        return args.preset.split(":", 1)[1]
    return None


# ---------------------------------------------------------------------------
# output


def _jsonable(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def render(header, columns, rows, fmt, payload=None):
    header = _jsonable(header)
    if fmt == "json":
        doc = {"header": header, "columns": list(columns), "rows": _jsonable([list(r) for r in rows])}
        if payload is not None:
            doc["result"] = _jsonable(payload)
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    lines = [f"# qcs {header['version']}"]
    for k in sorted(header):
        if k != "version":
            lines.append(f"# {k} {json.dumps(header[k], sort_keys=True)}")
    lines.append(",".join(columns))
    lines += [",".join(_cell(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


def _emit(args, text, stdout):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def _header(args, **extra):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    h = {"version": __version__, "config": cfg, "seed": args.seed, "threads": args.threads}
    h.update(extra)
    return h


# ---------------------------------------------------------------------------
# commands


def cmd_diffraction(args):
    S = resolve_scheme(args, "quadratic:2")
    eps = parse_grid(args.eps_grid)
    M = dfr.centered_diffraction(S, eps_max=max(eps), weight_floor=args.weight_floor)
    rows = []
    for e in eps:
        m, t = dfr.ball_mass(M, e)
        rows.append((e, m, t))
    fit = dfr.fit_scaling([(e, m) for e, m, _ in rows])
    cls = dfr.classify_hyperuniform(fit, S.lattice.d1)
    C = dfr.envelope_constant([(e, m) for e, m, _ in rows], 2 * S.lattice.d1)
    h = _header(
        args,
        scheme=S.label,
        atoms=len(M),
        eps_max=M.eps_max,
        weight_floor=M.weight_floor,
        tail_bound=M.tail_bound,
        fit_slope=fit.slope,
        fit_intercept=fit.intercept,
        fit_method=fit.method,
        classification=cls,
        envelope_C=C,
    )
    return h, ("eps", "mass", "tail_bound"), rows, None, EXIT_OK


def cmd_variance(args):
    S = resolve_scheme(args)
    Rs = parse_grid(args.R_grid)
    rows = []
    if isinstance(S, pointset.PoissonProcess):
        for i, R in enumerate(Rs):
            est = pointset.mc_number_variance(S, R, args.samples, args.seed, stream=i)
            ref = dfr.poisson_variance(S.d, S.intensity, R)
            rows.append((R, est.variance, est.stderr_variance, ref, 0.0, (est.variance - ref) / est.stderr_variance))
        h = _header(args, scheme=S.label, spectral="exact Poisson formula")
    else:
        vals, tails, n = dfr.spectral_variance_scheme(S, Rs, points=args.spectral_points)
        for i, R in enumerate(Rs):
            est = pointset.mc_number_variance(S, R, args.samples, args.seed, stream=i)
            ref = float(vals[i] + tails[i])
            rows.append((R, est.variance, est.stderr_variance, float(vals[i]), float(tails[i]),
                         (est.variance - ref) / est.stderr_variance))
        h = _header(args, scheme=S.label, spectral_points_visited=int(n),
                    spectral="truncated dual sum plus mean-density tail estimate")
    cols = ("R", "mc_variance", "mc_stderr", "spectral_value", "spectral_tail", "z_score")
    return h, cols, rows, None, EXIT_OK


def cmd_anv(args):
    S = resolve_scheme(args)
    Rs = parse_grid(args.R_grid)
    rows = pointset.mc_anv_curve(S, Rs, args.samples, args.seed)
    return _header(args, scheme=S.label), ("R", "anv", "stderr"), rows, None, EXIT_OK


def cmd_repellence(args):
    S = resolve_scheme(args, "quadratic:2")
    eps = parse_grid(args.eps_grid)
    scan = beta_repellence_scan(dual_basis(S.lattice), eps, args.xi2_cap)
    alpha = None
    if S.label.startswith("gamma_a:"):
        a = parse_number(S.label.split(":")[1].split(",")[0])
        alpha, _ = alpha_repellence_scan(a, args.q_max)
    h = _header(args, scheme=S.label, beta_hat=scan.beta_hat, alpha_hat=alpha, xi2_cap=args.xi2_cap)
    return h, ("eps", "min_xi2"), scan.rows, None, EXIT_OK


def cmd_nonhyper(args):
    if args.delta <= 2.0 / float(args.gamma):
        raise UsageError("outside theorem regime: need delta > 2/gamma")
    cert = nonhyper.nonhyper_certificate(args.gamma, args.levels, args.delta, args.grid_n)
    d = nonhyper.certificate_to_dict(cert)
    rows = [(r["k"], r["u_k"], r["mass"], r["tail"], r["lower_bound"], r["mass_lower_bound"], r["ratio"], r["m_max"])
            for r in d["rows"]]
    h = _header(args, certificate={k: v for k, v in d.items() if k != "rows"})
    cols = ("k", "u_k", "mass", "tail_bound", "lower_bound", "lower_bound_minus_Cu", "ratio", "m_max")
    return h, cols, rows, d, EXIT_OK if cert.passed else EXIT_CHECK


def cmd_suspension(args):
    qs = [args.q] if args.q else []
    pv = _preset_value(args, "suspension")
    if not qs:
        qs = [pv or "3/4"]
    qlist = [Fraction(parse_number(q)) for q in ",".join(qs).split(",")]
    Rs = parse_grid(args.R_grid)
    rows, ok = [], True
    for q in qlist:
        s2, s2t = suspension.sigma2(q, args.N)
        cf, cft = suspension.cf_constant(q, args.N, with_tail=True)
        ob = suspension.coboundary_obstruction(q, args.N)
        obt = suspension.obstruction_tail(args.N)
        passed, clb = suspension.clb_bound_check(q, Rs, args.N)
        ok &= passed
        for i, (R, dev, bound, _) in enumerate(clb):
            if args.samples > 0:
                est = suspension.mc_suspension_variance(q, R, args.samples, args.seed + i)
                mc, se = est.variance / (2 * R), est.stderr_variance / (2 * R)
            else:
                mc = se = math.nan
            exact = suspension.suspension_variance_exact(q, R, args.N) / (2 * R)
            rows.append((q, R, s2, s2t, cf, cft, abs(ob), obt, dev, bound, exact, mc, se))
    if args.orbit_out:
        orb = suspension.simulate_orbit(qlist[0], args.seed, (-args.orbit_n, args.orbit_n))
        ok &= orb.two_syndetic
        with open(args.orbit_out, "w") as fh:
            fh.write(" ".join(str(int(n)) for n in orb.hits) + "\n")
    cols = ("q", "R", "sigma2", "sigma2_tail", "C_f", "C_f_tail", "obstruction_modulus", "obstruction_tail",
            "clb_deviation", "clb_bound", "exact_variance_over_2R", "mc_variance_over_2R", "mc_stderr_over_2R")
    return _header(args), cols, rows, None, EXIT_OK if ok else EXIT_CHECK


def cmd_padic(args):
    p = args.p
    if p is None:
        pv = _preset_value(args, "padic")
        p = int(pv) if pv else 2
    atoms = padic.padic_diffraction_atoms(p, args.max_height, args.max_denom_exp)
    mass, passed = padic.stealth_check(p, args.max_height, args.max_denom_exp)
    control = padic.shell_mass(p, -1, args.max_height, args.max_denom_exp)
    h = _header(args, p=p, stealth_mass=mass, stealth_pass=passed, control_shell_mass=control,
                height_tail_bound_per_shell=padic.ball_mass_tail(p, args.max_denom_exp, args.max_height))
    rows = [(a.k, a.j, a.valuation, a.weight) for a in atoms]
    return h, ("k", "j", "valuation", "weight"), rows, None, EXIT_OK if passed and control > 0 else EXIT_CHECK


def cmd_rigidity(args):
    S = resolve_scheme(args, "fibonacci")
    n_lo, n_hi = (int(v) for v in args.n_range.split(":"))
    ns = list(range(n_lo, n_hi + 1))
    base = args.base or dfr.PHI
    eps = [base ** (-n) for n in ns]
    M = dfr.centered_diffraction(S, eps_max=args.eps_max, weight_floor=args.weight_floor)
    d = S.lattice.d1
    ok, C_hat, ratios = dfr.rigidity_check(M, eps, d, args.delta)
    gamma_p = args.gamma_prime
    rows, prev = [], math.inf
    mono = True
    for n, e, r in zip(ns, eps, ratios):
        m, t = dfr.ball_mass(M, e)
        tn = e ** (1.0 + gamma_p)
        g, gt = dfr.gaussian_statistic_variance(M, tn, d)
        gi = dfr.gaussian_omitted_inside(M, tn, d)
        mono &= g < prev
        prev = g
        rows.append((n, e, m, t, r, tn, g, gt, gi))
    h = _header(args, scheme=S.label, C_hat=C_hat, rigidity_tail_ok=ok, gaussian_monotone=mono,
                eps_max=M.eps_max, tail_bound=M.tail_bound)
    cols = ("n", "eps", "mass", "mass_tail", "ratio", "t", "gaussian_variance", "gaussian_tail_beyond",
            "gaussian_omitted_inside")
    return h, cols, rows, None, EXIT_OK if ok and mono else EXIT_CHECK


# ---------------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="qcs", description="Diffraction, number variance and rigidity of cut-and-project processes.")
    p.add_argument("--version", action="version", version=f"qcs {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, preset=True):
        if preset:
            sp.add_argument("--preset")
            sp.add_argument("--scheme-json")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--budget", type=float)
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--threads", type=int, default=1)

    sp = sub.add_parser("diffraction")
    common(sp)
    sp.add_argument("--eps-grid", default="1e-1:1e-4:log8")
    sp.add_argument("--weight-floor", type=float, default=1e-14)
    sp.set_defaults(func=cmd_diffraction)

    sp = sub.add_parser("variance")
    common(sp)
    sp.add_argument("--R-grid", default="5,10,20")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--spectral-points", type=float, default=4e7)
    sp.set_defaults(func=cmd_variance)

    sp = sub.add_parser("anv")
    common(sp)
    sp.add_argument("--R-grid", default="5,10,20")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.set_defaults(func=cmd_anv)

    sp = sub.add_parser("repellence")
    common(sp)
    sp.add_argument("--eps-grid", default="1e-1:1e-4:log4")
    sp.add_argument("--xi2-cap", type=float, default=1e6)
    sp.add_argument("--q-max", type=int, default=1000)
    sp.set_defaults(func=cmd_repellence)

    sp = sub.add_parser("nonhyper")
    common(sp, preset=False)
    sp.add_argument("--gamma", type=lambda s: Fraction(s), default=Fraction(4))
    sp.add_argument("--delta", type=float, default=0.6)
    sp.add_argument("--levels", type=int, default=3)
    sp.add_argument("--grid-n", type=int, default=10_000)
    sp.set_defaults(func=cmd_nonhyper)

    sp = sub.add_parser("suspension")
    common(sp)
    sp.add_argument("--q")
    sp.add_argument("--R-grid", default="5,10,20,50")
    sp.add_argument("--N", type=int, default=60)
    sp.add_argument("--samples", type=int, default=0)
    sp.add_argument("--orbit-out")
    sp.add_argument("--orbit-n", type=int, default=10_000)
    sp.set_defaults(func=cmd_suspension)

    sp = sub.add_parser("padic")
    common(sp)
    sp.add_argument("--p", type=int)
    sp.add_argument("--max-height", type=int, default=1000)
    sp.add_argument("--max-denom-exp", type=int, default=4)
    sp.set_defaults(func=cmd_padic)

    sp = sub.add_parser("rigidity")
    common(sp)
    sp.add_argument("--n-range", default="2:12")
    sp.add_argument("--base", type=float)
    sp.add_argument("--delta", type=float, default=2.0)
    sp.add_argument("--gamma-prime", type=float, default=1.0 / 3.0)
    sp.add_argument("--eps-max", type=float, default=1.0)
    sp.add_argument("--weight-floor", type=float, default=1e-14)
    sp.set_defaults(func=cmd_rigidity)
    return p


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if args.threads < 1:
        print("qcs: error: --threads must be at least 1", file=stderr)
        return EXIT_USAGE
    old_budget = os.environ.get("QCS_BUDGET")
    if args.budget is not None:
        os.environ["QCS_BUDGET"] = str(int(args.budget))
    try:
        header, cols, rows, payload, code = args.func(args)
        _emit(args, render(header, cols, rows, args.format, payload), stdout)
        return code
    except UsageError as exc:
        print(f"qcs: error: {exc}", file=stderr)
        return EXIT_USAGE
    except CheckFailed as exc:
        print(f"qcs: check failed: {exc}", file=stderr)
        return EXIT_CHECK
    except (BudgetError, PrecisionError, QCSError) as exc:
        print(f"qcs: {exc}", file=stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        print(f"qcs: error: {exc}", file=stderr)
        return EXIT_USAGE
    finally:
        if args.budget is not None:
            if old_budget is None:
                os.environ.pop("QCS_BUDGET", None)
            else:
                os.environ["QCS_BUDGET"] = old_budget


if __name__ == "__main__":
    sys.exit(main())
