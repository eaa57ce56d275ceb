"""Command-line surface: every operation, reproducible file outputs.

Data outputs are CSV/JSON with numbers at 17 significant digits; --plot
additionally renders figures next to them.  Exit codes: 0 success,
2 validation error, 3 numerical non-convergence, 4 budget exceeded.
Validation diagnostics go to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import mra, qlat, refine, subst
from .algnum import build_context, nearest_integer_sequence
from .errors import PVLatticeError, ZeroHit, ZeroOnOrbit, exit_code_for


def _fmt(x):
    """Round-trip formatting at 17 significant digits."""
    if isinstance(x, float):
        return float(f"{x:.17g}")
    if isinstance(x, complex):
        return [float(f"{x.real:.17g}"), float(f"{x.imag:.17g}")]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {k: _fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_fmt(v) for v in x]
    if isinstance(x, np.floating):
        return _fmt(float(x))
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, Path):
        return str(x)
    return x


def emit(obj, stream=None):
    json.dump(_fmt(obj), stream or sys.stdout, indent=2)
    (stream or sys.stdout).write("\n")


def _ints(text):
    return tuple(int(t) for t in text.split(","))


def _floats(text):
    return tuple(float(t) for t in text.split(","))


def _fractions(text):
    return tuple(Fraction(t) for t in text.split(","))


def _vectors(text):
    return [_ints(part) for part in text.split(";")]


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str):
    path.write_text(text)
    return str(path)


def _load_mask(args):
    return refine.mask_from_json(Path(args.mask).read_text())


def _context(args):
    return build_context(_ints(args.poly), args.precision)


def _run_config(args):
    return {
        "seed": args.seed,
        "threads": args.threads,
        "tolerances": {k: v for k, v in (args.tol or {}).items()},
    }


# --- command implementations ----------------------------------------------

def cmd_pv_classify(args):
    ctx = _context(args)
    out = _outdir(args)
    _write(out / "context.json", json.dumps(ctx.to_json()) + "\n")
    emit(
        {
            "classification": ctx.classification,
            "roots": [complex(z) for z in ctx.roots],
            "leading_root": ctx.lam,
            "unit_constant": ctx.unit_constant,
            "unit_circle_margin": ctx.classification_margin,
        }
    )
    return 0


def cmd_pv_pvnorm(args):
    ctx = _context(args)
    alpha = ctx.element(_fractions(args.alpha))
    seq = nearest_integer_sequence(alpha, args.kmax)
    out = _outdir(args)
    lines = ["k,n_k,distance"]
    lines += [f"{k},{n},{d:.17g}" for k, n, d in seq]
    path = _write(out / "pvnorm.csv", "\n".join(lines) + "\n")
    rate = max(abs(z) for z in ctx.roots[1:])
    files = [path]
    if args.plot:
        from . import figures

        files.append(
            figures.decay_plot(
                [k for k, _, _ in seq],
                [d for _, _, d in seq],
                rate,
                out / f"pvnorm.{args.plot_format}",
            )
        )
    emit({"rows": len(seq), "conjugate_modulus": rate, "files": files})
    return 0


def cmd_qlat_generate(args):
    ctx = _context(args)
    q = qlat.generate(
        ctx,
        _floats(args.sigma),
        args.L,
        tol_boundary=args.tol.get("boundary", qlat.TOL_BOUNDARY),
        cell_budget=int(args.tol.get("cell-budget", qlat.CELL_BUDGET)),
    )
    out = _outdir(args)
    files = [_write(out / "points.csv", q.to_csv())]
    if args.plot:
        from . import figures

        files.append(
            figures.point_row(q.values, out / f"points.{args.plot_format}", q.half_width)
        )
    emit(
        {
            "count": len(q),
            "boundary_skipped": q.boundary_skipped,
            "min_gap_bound": qlat.min_gap_lower_bound(ctx, q.window),
            "files": files,
        }
    )
    return 0


def cmd_qlat_gaps(args):
    ctx = _context(args)
    q = qlat.generate(ctx, _floats(args.sigma), args.L)
    gaps = qlat.gap_alphabet(q, args.margin)
    out = _outdir(args)
    data = [
        {"value": g.value, "preimage": list(g.preimage), "multiplicity": g.multiplicity}
        for g in gaps
    ]
    files = [_write(out / "gaps.json", json.dumps(_fmt(data), indent=2) + "\n")]
    if args.plot:
        from . import figures

        files.append(figures.gap_histogram(gaps, out / f"gaps.{args.plot_format}"))
    emit({"letters": len(gaps), "gaps": data, "files": files})
    return 0


def cmd_qlat_check(args):
    ctx = _context(args)
    sigma = _floats(args.sigma)
    out = _outdir(args)
    if args.law == "group-laws":
        rep = qlat.check_group_laws(ctx, sigma, _floats(args.sigma2), args.L)
    elif args.law == "inflation":
        rep = qlat.check_inflation(qlat.generate(ctx, sigma, args.L))
    elif args.law == "meyer":
        _, rep = qlat.check_meyer(qlat.generate(ctx, sigma, args.L), args.margin)
    else:  # delone
        q = qlat.generate(ctx, sigma, args.L)
        mn, mx = qlat.delone_constants(q, args.margin)
        rep = qlat.LemmaReport(
            "delone",
            0 if mn >= qlat.min_gap_lower_bound(ctx, sigma) - 1e-9 else 1,
            {"min_gap": mn, "max_gap": mx, "bound": qlat.min_gap_lower_bound(ctx, sigma)},
        )
    _write(out / f"check_{args.law}.json", json.dumps(_fmt(rep.to_json()), indent=2) + "\n")
    emit(rep.to_json())
    return 0


def _rule_from_args(args):
    if getattr(args, "rule", None):
        return subst.rule_from_json(Path(args.rule).read_text())
    ctx = _context(args)
    return subst.derive_rule(ctx, _floats(args.sigma), args.L_probe)


def cmd_subst_derive(args):
    rule = _rule_from_args(args)
    out = _outdir(args)
    files = [_write(out / "rule.json", json.dumps(_fmt(rule.to_json()), indent=2) + "\n")]
    emit(
        {
            "gap_types": [list(t) for t in rule.gap_types],
            "gap_values": list(rule.gap_values),
            "perron": rule.perron_eigenvalue(),
            "lambda": rule.context.lam,
            "origin_collar": rule.origin_decomposition is not None,
            "files": files,
        }
    )
    return 0


def cmd_subst_expand(args):
    rule = _rule_from_args(args)
    values, preimages, types = subst.expand(rule, args.k)
    out = _outdir(args)
    n = rule.context.degree
    lines = ["value," + ",".join(f"l_{i}" for i in range(n)) + ",type"]
    for v, row, t in zip(values, preimages, types):
        lines.append(f"{v:.17g}," + ",".join(str(int(x)) for x in row) + f",{t}")
    files = [_write(out / "expansion.csv", "\n".join(lines) + "\n")]
    if args.plot:
        from . import figures

        files.append(figures.point_row(values, out / f"expansion.{args.plot_format}"))
    emit({"count": len(values), "interval_end": rule.gap_values[0] * rule.context.lam ** args.k, "files": files})
    return 0


def cmd_subst_mask(args):
    rule = _rule_from_args(args)
    out = _outdir(args)
    masks = subst.vector_mask(rule)
    data = [{"offset": list(off), "matrix": mat.tolist()} for off, mat in masks]
    files = [_write(out / "vector_mask.json", json.dumps(data, indent=2) + "\n")]
    emit({"offsets": len(masks), "types": rule.m, "files": files})
    return 0


def cmd_refine_mahler(args):
    mask = _load_mask(args)
    res = refine.mahler_mask(
        mask,
        tol_mahler=args.tol.get("mahler", refine.TOL_MAHLER),
        grid_cap=int(args.tol.get("mahler-grid-cap", 4096)),
    )
    out = _outdir(args)
    payload = {
        "value": res.value,
        "method": res.method,
        "error_estimate": res.error_estimate,
    }
    _write(out / "mahler.json", json.dumps(_fmt(payload), indent=2) + "\n")
    emit(payload)
    return 0


def cmd_refine_rho(args):
    mask = _load_mask(args)
    m = refine.mahler_mask(mask, tol_mahler=args.tol.get("mahler", refine.TOL_MAHLER))
    value = refine.rho(mask, mahler=m)
    out = _outdir(args)
    payload = {"rho": value, "mahler": m.value, "method": m.method}
    _write(out / "rho.json", json.dumps(_fmt(payload), indent=2) + "\n")
    sys.stdout.write(f"{value:.17g}\n")
    return 0


def cmd_refine_hat(args):
    mask = _load_mask(args)
    out = _outdir(args)
    if args.y is not None:
        val = refine.fourier_hat(mask, args.y, args.tail_tol)
        emit({"y": args.y, "value": complex(val), "modulus": abs(val)})
        return 0
    a, b, count = args.y_grid
    ys = np.linspace(a, b, int(count))
    vals = refine.fourier_hat(mask, ys, args.tail_tol)
    lines = ["y,re,im,modulus"]
    for y, v in zip(ys, vals):
        lines.append(f"{y:.17g},{v.real:.17g},{v.imag:.17g},{abs(v):.17g}")
    files = [_write(out / "hat.csv", "\n".join(lines) + "\n")]
    if args.plot:
        from . import figures

        files.append(
            figures.hat_profile(ys, np.abs(vals), out / f"hat.{args.plot_format}")
        )
    emit({"rows": int(count), "files": files})
    return 0


def cmd_refine_meanlog(args):
    mask = _load_mask(args)
    if args.target == "mask":
        res = refine.mean_log_mask(mask, args.L, int(args.samples_per_unit))
    else:
        res = refine.mean_log_hat(mask, args.L, args.samples_per_unit)
    emit(
        {
            "target": args.target,
            "L": args.L,
            "value": res.value,
            "samples": res.samples,
            "clipped": res.clipped,
        }
    )
    return 0


def cmd_refine_sublevel(args):
    mask = _load_mask(args)
    res = refine.sublevel_measure(mask, _floats(args.v_grid), args.L, args.samples)
    out = _outdir(args)
    lines = ["v,measure"]
    lines += [f"{v:.17g},{mu:.17g}" for v, mu in res.pairs]
    files = [_write(out / "sublevel.csv", "\n".join(lines) + "\n")]
    if args.plot:
        from . import figures

        files.append(
            figures.sublevel_plot(
                res.pairs, res.fitted_constant, mask.m, args.L,
                out / f"sublevel.{args.plot_format}",
            )
        )
    emit({"fitted_constant": res.fitted_constant, "samples": res.samples, "files": files})
    return 0


def cmd_refine_erdos(args):
    mask = _load_mask(args)
    if mask.context is not None:
        alpha = mask.context.element(_fractions(args.alpha))
    else:
        alpha = _fractions(args.alpha)[0]
    out = _outdir(args)
    try:
        res = refine.erdos_sequence(
            mask, alpha, args.kmax, tol_zero=args.tol.get("zero", refine.TOL_ZERO)
        )
    except ZeroHit as e:
        payload = {
            "zero_hit": {"exponent": e.exponent, "modulus": e.modulus},
            "message": str(e),
        }
        _write(out / "erdos.json", json.dumps(_fmt(payload), indent=2) + "\n")
        emit(payload)
        return 0
    lines = ["k,re,im,modulus"]
    for k, v in zip(res.ks, res.values):
        lines.append(f"{k},{v.real:.17g},{v.imag:.17g},{abs(v):.17g}")
    files = [_write(out / "erdos.csv", "\n".join(lines) + "\n")]
    if args.plot:
        from . import figures

        files.append(
            figures.modulus_sequence(
                res.ks, [abs(v) for v in res.values], out / f"erdos.{args.plot_format}"
            )
        )
    emit(
        {
            "plateau_stat": res.plateau_stat,
            "final_modulus": abs(res.values[-1]),
            "files": files,
        }
    )
    return 0


def cmd_refine_orbit(args):
    mask = _load_mask(args)
    ctx = mask.context if mask.context is not None else _context(args)
    out = _outdir(args)
    try:
        res = refine.orbit_mean(
            ctx, mask, _fractions(args.q), tol_zero=args.tol.get("zero", refine.TOL_ZERO)
        )
    except ZeroOnOrbit as e:
        payload = {
            "zero_on_orbit": {"state": list(e.state), "step": e.step, "modulus": e.modulus},
            "message": str(e),
        }
        _write(out / "orbit.json", json.dumps(_fmt(payload), indent=2) + "\n")
        emit(payload)
        return 0
    payload = {
        "preperiod": res.preperiod,
        "cycle_length": res.cycle_length,
        "mean": res.mean,
        "cycle_start": [str(c) for c in res.cycle_start],
    }
    _write(out / "orbit.json", json.dumps(_fmt(payload), indent=2) + "\n")
    emit(payload)
    return 0


def cmd_mra_xi(args):
    ctx = _context(args)
    xi = mra.derive_xi(ctx, _floats(args.sigma))
    emit({"xi": list(xi)})
    return 0


def cmd_mra_nesting(args):
    ctx = _context(args)
    if args.unchecked:
        rep = mra.check_nesting_raw(
            ctx, _floats(args.sigma), _vectors(args.translations), args.L
        )
    else:
        cfg = mra.build_config(ctx, _floats(args.sigma), _vectors(args.translations))
        rep = mra.check_nesting(cfg, args.L)
    out = _outdir(args)
    _write(out / "nesting.json", json.dumps(_fmt(rep.to_json()), indent=2) + "\n")
    emit(rep.to_json())
    return 0


def cmd_mra_project(args):
    ctx = _context(args)
    q = qlat.generate(ctx, _floats(args.sigma), args.L)
    rows = []
    for line in Path(args.samples).read_text().strip().splitlines():
        if line.startswith("x"):
            continue
        x, v = line.split(",")
        rows.append((float(x), float(v)))
    pc = mra.project_pc(q, rows, args.k)
    out = _outdir(args)
    files = [_write(out / "projection.csv", pc.to_csv())]
    emit({"intervals": len(pc.values), "filled": len(pc.filled), "files": files})
    return 0


# --- parser -----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """ArgumentParser that accepts -1,-1 style coefficient lists as values."""

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self._negative_number_matcher = re.compile(r"^-\d+(?:[,./-]|\d|$)")


def _add_common(p):
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="seed for sampled estimators")
    p.add_argument("--threads", type=int, default=1, help="concurrency cap (reserved)")
    p.add_argument("--plot", action="store_true", help="render figures next to data files")
    p.add_argument("--plot-format", default="png", choices=["png", "svg"])
    p.add_argument("--precision", type=int, default=53, help="root working precision bits")


def _poly_arg(p, required=True):
    p.add_argument("--poly", required=required, help="c_0,c_1,... (monic implied)")


def build_parser():
    top = _Parser(prog="pvlattice", description=__doc__)
    sub = top.add_subparsers(dest="group", required=True)

    pv = sub.add_parser("pv", help="PV number classification and approximation")
    pvsub = pv.add_subparsers(dest="cmd", required=True)
    p = pvsub.add_parser("classify")
    _poly_arg(p)
    _add_common(p)
    p.set_defaults(fn=cmd_pv_classify)
    p = pvsub.add_parser("pvnorm")
    _poly_arg(p)
    p.add_argument("--alpha", default="1", help="rational coordinates of alpha")
    p.add_argument("--kmax", type=int, default=40)
    _add_common(p)
    p.set_defaults(fn=cmd_pv_pvnorm)

    ql = sub.add_parser("qlat", help="cut-and-project quasilattices")
    qlsub = ql.add_subparsers(dest="cmd", required=True)
    p = qlsub.add_parser("generate")
    _poly_arg(p)
    p.add_argument("--sigma", required=True)
    p.add_argument("--L", type=float, required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_qlat_generate)
    p = qlsub.add_parser("gaps")
    _poly_arg(p)
    p.add_argument("--sigma", required=True)
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--margin", type=float, default=2.0)
    _add_common(p)
    p.set_defaults(fn=cmd_qlat_gaps)
    p = qlsub.add_parser("check")
    p.add_argument("law", choices=["group-laws", "inflation", "meyer", "delone"])
    _poly_arg(p)
    p.add_argument("--sigma", required=True)
    p.add_argument("--sigma2", help="second window for group-laws")
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--margin", type=float, default=2.0)
    _add_common(p)
    p.set_defaults(fn=cmd_qlat_check)

    st = sub.add_parser("subst", help="substitution dynamics")
    stsub = st.add_subparsers(dest="cmd", required=True)
    for name, fn in [
        ("derive", cmd_subst_derive),
        ("expand", cmd_subst_expand),
        ("mask", cmd_subst_mask),
    ]:
        p = stsub.add_parser(name)
        p.add_argument("--rule", help="rule JSON file (otherwise derive from --poly)")
        _poly_arg(p, required=False)
        p.add_argument("--sigma")
        p.add_argument("--L-probe", type=float, default=80.0, dest="L_probe")
        if name == "expand":
            p.add_argument("--k", type=int, required=True)
        _add_common(p)
        p.set_defaults(fn=fn)

    rf = sub.add_parser("refine", help="refinement masks and analysis")
    rfsub = rf.add_subparsers(dest="cmd", required=True)
    p = rfsub.add_parser("mahler")
    p.add_argument("--mask", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_refine_mahler)
    p = rfsub.add_parser("rho")
    p.add_argument("--mask", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_refine_rho)
    p = rfsub.add_parser("hat")
    p.add_argument("--mask", required=True)
    p.add_argument("--y", type=float)
    p.add_argument("--y-grid", type=float, nargs=3, metavar=("A", "B", "N"))
    p.add_argument("--tail-tol", type=float, default=refine.TAIL_TOL)
    _add_common(p)
    p.set_defaults(fn=cmd_refine_hat)
    p = rfsub.add_parser("meanlog")
    p.add_argument("--mask", required=True)
    p.add_argument("--target", choices=["mask", "hat"], default="mask")
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--samples-per-unit", type=float, default=64)
    _add_common(p)
    p.set_defaults(fn=cmd_refine_meanlog)
    p = rfsub.add_parser("sublevel")
    p.add_argument("--mask", required=True)
    p.add_argument("--v-grid", required=True)
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--samples", type=int, default=10**5)
    _add_common(p)
    p.set_defaults(fn=cmd_refine_sublevel)
    p = rfsub.add_parser("erdos")
    p.add_argument("--mask", required=True)
    p.add_argument("--alpha", default="1")
    p.add_argument("--kmax", type=int, default=40)
    _add_common(p)
    p.set_defaults(fn=cmd_refine_erdos)
    p = rfsub.add_parser("orbit")
    p.add_argument("--mask", required=True)
    p.add_argument("--q", required=True, help="rational coordinates, comma separated")
    _poly_arg(p, required=False)
    _add_common(p)
    p.set_defaults(fn=cmd_refine_orbit)

    mr = sub.add_parser("mra", help="multiresolution nesting and projection")
    mrsub = mr.add_subparsers(dest="cmd", required=True)
    p = mrsub.add_parser("xi")
    _poly_arg(p)
    p.add_argument("--sigma", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_mra_xi)
    p = mrsub.add_parser("nesting")
    _poly_arg(p)
    p.add_argument("--sigma", required=True)
    p.add_argument("--translations", required=True, help="preimages 'a,b;c,d;...'")
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--unchecked", action="store_true",
                   help="skip the xi-membership precondition (negative controls)")
    _add_common(p)
    p.set_defaults(fn=cmd_mra_nesting)
    p = mrsub.add_parser("project")
    _poly_arg(p)
    p.add_argument("--sigma", required=True)
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--samples", required=True, help="CSV file with x,value rows")
    _add_common(p)
    p.set_defaults(fn=cmd_mra_project)

    return top


def _extract_tols(argv):
    """Pull --tol-KEY=VALUE flags out before argparse sees them."""
    tols = {}
    rest = []
    for arg in argv:
        if arg.startswith("--tol-"):
            body = arg[len("--tol-"):]
            if "=" not in body:
                raise PVLatticeError(f"malformed tolerance flag {arg!r}; use --tol-KEY=VALUE")
            key, _, value = body.partition("=")
            tols[key] = float(value)
        else:
            rest.append(arg)
    return tols, rest


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        tols, rest = _extract_tols(argv)
        parser = build_parser()
        args = parser.parse_args(rest)
        args.tol = tols
        return args.fn(args)
    except PVLatticeError as e:
        emit({"error": type(e).__name__, "message": str(e)}, sys.stderr)
        return exit_code_for(e)
    except (OSError, ValueError, KeyError) as e:
        emit({"error": type(e).__name__, "message": str(e)}, sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
