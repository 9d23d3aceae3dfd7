"""Command-line entry point.

Subcommands: ``converge``, ``infsup``, ``unisolvence``, ``kernel`` and
``export-basis``.  Output goes to stdout unless ``--output`` is given; a
relative ``--output`` (or the default file name when only the environment
variable is set) is resolved against ``$MIXEDELAST_OUTPUT_DIR``.

Exit status: 0 when every check run by the command passes, 1 when a check
fails, 2 for usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .mesh import uniform_mesh
from .ref3d import PLANES
from .ref3d import FAMILIES as FAMILIES_3D
from .ref3d import MAX_K as MAX_K_3D
from .ref3d import (
    all_elements_3d,
    displacement_element_3d,
    divergence_residuals_3d,
    normal_stress_element_3d,
    shear_element_3d,
    stress_element_3d,
)
from .refelem import UnisolvenceError, divergence_fields, membership_residual, verify_unisolvence
from .refelem2d import DIV_ROWS, FAMILIES, MAX_K
from .refelem2d import displacement_element as displacement_element_2d
from .refelem2d import displacement_space as displacement_space_2d
from .refelem2d import normal_stress_element, shear_element, stress_element
from .solve import SolverError
from .stability import (
    KERNEL_RTOL,
    StabilityError,
    diagnostics_csv,
    divergence_rank_deficiency,
    infsup_report,
    macro_kernel,
)
from .study import convergence_table

ENV_OUTPUT_DIR = "MIXEDELAST_OUTPUT_DIR"
FORMATS = ("csv", "md", "json")
INFSUP_FLOOR = math.sqrt(2.0 / 3.0) - 1e-9
KERNEL_MATCH_TOL = 1e-8
DIV_INCLUSION_TOL = 1e-11


@dataclass
class RunConfig:
    command: str
    k: list[int] = field(default_factory=list)
    family: str = "full"
    bc: str = "displacement"
    problem: int | None = None
    levels: list[int] = field(default_factory=list)
    n: list[int] = field(default_factory=list)
    norm: str = "hdiv"
    dim: int = 2
    element: str = "stress"
    plane: str = "xy"
    format: str = "csv"
    output: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class Outcome:
    """Table produced by a command plus the pass/fail of its checks."""

    columns: list[str]
    rows: list[list]
    ok: bool
    extra: dict = field(default_factory=dict)
    markdown: str | None = None
    precision: int = 10


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def run_converge(cfg: RunConfig) -> Outcome:
    report = convergence_table(cfg.problem, cfg.k[0], cfg.family, cfg.levels)
    columns = ["level", "n", "err_u", "rate_u", "err_sigma", "rate_sigma", "err_div", "rate_div"]
    rows = []
    for lvl, e, r in report.rows():
        rows.append([lvl, 2 ** (lvl - 1), float(e[0]), float(r[0]), float(e[1]), float(r[1]),
                     float(e[2]), float(r[2])])
    ok = bool(np.all(np.isfinite(report.errors)))
    return Outcome(columns, rows, ok, {"report": report.to_dict()}, report.to_markdown())


def _infsup_check(r) -> bool:
    if r.bc == "displacement" and r.norm == "hdiv":
        return INFSUP_FLOOR <= r.beta_h <= 1.0 + 1e-12
    return r.beta_h > 0.0


def run_infsup(cfg: RunConfig) -> Outcome:
    results = [infsup_report(uniform_mesh(n), k, cfg.family, cfg.bc, cfg.norm) for k in cfg.k for n in cfg.n]
    columns = ["n", "k", "family", "bc", "beta_h", "kernel_dim"]
    rows = [[r.n, r.k, r.family, r.bc, r.beta_h, r.kernel_dim] for r in results]
    ok = all(_infsup_check(r) for r in results)
    return Outcome(columns, rows, ok, {"csv": diagnostics_csv(results)})


def _audit(elem, dim: int, residual: float | None = None):
    try:
        rep = verify_unisolvence(elem)
        ok = rep.ok and (residual is None or residual < DIV_INCLUSION_TOL)
        return [elem.name, dim, rep.dimension, rep.ndofs, rep.cond,
                "" if residual is None else residual, ok]
    except UnisolvenceError as exc:
        return [elem.name, dim, len(elem.space), len(elem.dofs), exc.cond, "", False]


def run_unisolvence(cfg: RunConfig) -> Outcome:
    rows = []
    for family in FAMILIES:
        for k in range(1, MAX_K + 1):
            stress = stress_element(k, family)
            div = divergence_fields(stress.basis, 2, DIV_ROWS)
            res = float(np.max(membership_residual(div, displacement_space_2d(k, family))))
            rows.append(_audit(normal_stress_element(k, family), 2))
            rows.append(_audit(stress, 2, res))
            rows.append(_audit(displacement_element_2d(k, family), 2))
    for k in range(1, MAX_K + 1):
        rows.append(_audit(shear_element(k), 2))
    div3 = {(f, k): float(np.max(divergence_residuals_3d(k, f)))
            for f in FAMILIES_3D for k in range(1, MAX_K_3D + 1)}
    for elem in all_elements_3d():
        res = None
        if elem.name.startswith("stress-3d"):
            k = int(elem.name.split("k=")[1].split(",")[0])
            fam = elem.name.rstrip(")").split(",")[-1]
            res = div3[(fam, k)]
        rows.append(_audit(elem, 3, res))
    columns = ["element", "dim", "dimension", "ndofs", "cond", "div_residual", "ok"]
    return Outcome(columns, rows, all(r[-1] for r in rows))


def run_kernel(cfg: RunConfig) -> Outcome:
    rows, bases, ok = [], {}, True
    for k in cfg.k:
        try:
            mk = macro_kernel(k, cfg.family)
        except StabilityError as exc:
            rows.append([k, cfg.family, "", "", "", "", str(exc)])
            ok = False
            continue
        if k == 1:
            resid = mk.contains(mk.checkerboard())
            match, label = resid < KERNEL_MATCH_TOL, "checkerboard"
        else:
            resid = mk.angle_to(mk.rigid_motions())
            match, label = resid < KERNEL_MATCH_TOL, "rigid-motions"
        for n in cfg.n:
            deficiency = divergence_rank_deficiency(uniform_mesh(n), k, cfg.family)
            rows.append([k, cfg.family, n, mk.dim, label, resid, deficiency])
            ok = ok and match and deficiency == 0
        bases[str(k)] = mk.basis.T.tolist()
    columns = ["k", "family", "n", "macro_kernel_dim", "kernel_mode", "mode_residual", "global_rank_deficiency"]
    return Outcome(columns, rows, ok, {"kernel_bases": bases, "kernel_rtol": KERNEL_RTOL})


def _element_for(cfg: RunConfig):
    k = cfg.k[0]
    if cfg.dim == 2:
        table = {"stress": lambda: stress_element(k, cfg.family),
                 "normal": lambda: normal_stress_element(k, cfg.family),
                 "shear": lambda: shear_element(k),
                 "displacement": lambda: displacement_element_2d(k, cfg.family)}
    else:
        table = {"stress": lambda: stress_element_3d(k, cfg.family),
                 "normal": lambda: normal_stress_element_3d(k, cfg.family),
                 "shear": lambda: shear_element_3d(k, cfg.plane, cfg.family),
                 "displacement": lambda: displacement_element_3d(k, cfg.family)}
    return table[cfg.element]()


def run_export_basis(cfg: RunConfig) -> Outcome:
    from .export import basis_rows

    elem = _element_for(cfg)
    axes = ["e_x", "e_y", "e_z"][: cfg.dim]
    rows = [[b, c, *exps, coeff] for b, c, exps, coeff in basis_rows(elem)]
    return Outcome(["basis", "comp", *axes, "coeff"], rows, True, {"element": elem.name}, precision=17)


COMMANDS = {
    "converge": run_converge,
    "infsup": run_infsup,
    "unisolvence": run_unisolvence,
    "kernel": run_kernel,
    "export-basis": run_export_basis,
}


# ---------------------------------------------------------------------------
# Formatting
# ---------------------------------------------------------------------------


def _cell(v, precision: int = 10) -> str:
    if isinstance(v, bool):
        return "pass" if v else "FAIL"
    if isinstance(v, float):
        return f"{v:.{precision}g}"
    return str(v)


def render(cfg: RunConfig, out: Outcome) -> str:
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(out.columns)
        for r in out.rows:
            w.writerow([_cell(v, out.precision) for v in r])
        return buf.getvalue()
    if cfg.format == "md":
        if out.markdown is not None:
            return out.markdown
        head = "| " + " | ".join(out.columns) + " |\n|" + "---|" * len(out.columns) + "\n"
        return head + "".join("| " + " | ".join(_cell(v, out.precision) for v in r) + " |\n" for r in out.rows)
    payload = {
        "provenance": {
            "config": cfg.to_dict(),
            "version": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "tolerances": {
                "infsup_floor": INFSUP_FLOOR,
                "kernel_rtol": KERNEL_RTOL,
                "kernel_match": KERNEL_MATCH_TOL,
                "div_inclusion": DIV_INCLUSION_TOL,
            },
        },
        "columns": out.columns,
        "rows": [[v if not isinstance(v, np.generic) else v.item() for v in r] for r in out.rows],
        "ok": out.ok,
    }
    payload.update({k: v for k, v in out.extra.items() if k != "csv"})
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def output_path(cfg: RunConfig) -> Path | None:
    base = os.environ.get(ENV_OUTPUT_DIR)
    if cfg.output:
        p = Path(cfg.output)
        return p if p.is_absolute() or not base else Path(base) / p
    if base:
        return Path(base) / f"{cfg.command}.{cfg.format}"
    return None


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixedelast", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, k_multi: bool, default_k):
        sp.add_argument("--k", type=int, nargs="+" if k_multi else None, default=default_k)
        sp.add_argument("--family", choices=FAMILIES, default="full")
        sp.add_argument("--format", choices=FORMATS, default="csv")
        sp.add_argument("--output", default=None)

    c = sub.add_parser("converge", help="convergence table for a manufactured problem")
    common(c, False, 2)
    c.add_argument("--problem", type=int, choices=(1, 2), required=True)
    c.add_argument("--levels", type=int, default=5, help="finest level (mesh 2^(L-1))")
    c.add_argument("--start-level", type=int, default=None,
                   help="coarsest level (default 1, or 2 for the traction problem)")

    s = sub.add_parser("infsup", help="discrete inf-sup constants")
    common(s, True, [1, 2, 3])
    s.add_argument("--bc", choices=("displacement", "traction"), default="displacement")
    s.add_argument("--n", type=int, nargs="+", default=[2, 4, 8])
    s.add_argument("--norm", choices=("hdiv", "mesh"), default="hdiv")

    u = sub.add_parser("unisolvence", help="audit every 2D and 3D reference element")
    u.add_argument("--format", choices=FORMATS, default="csv")
    u.add_argument("--output", default=None)

    kp = sub.add_parser("kernel", help="macroelement kernels")
    common(kp, True, [1, 2, 3])
    kp.add_argument("--n", type=int, nargs="+", default=[2, 4])

    e = sub.add_parser("export-basis", help="write a reference basis as a coefficient table")
    common(e, False, 1)
    e.add_argument("--dim", type=int, choices=(2, 3), default=2)
    e.add_argument("--element", choices=("stress", "normal", "shear", "displacement"), default="stress")
    e.add_argument("--plane", choices=tuple(PLANES), default="xy")
    return p


def parse_config(argv: list[str] | None = None) -> RunConfig:
    parser = build_parser()
    a = parser.parse_args(argv)
    ks = a.k if isinstance(getattr(a, "k", None), list) else [getattr(a, "k", 1)]
    cfg = RunConfig(command=a.command, k=ks, family=getattr(a, "family", "full"),
                    format=a.format, output=a.output)
    kmax = MAX_K
    if a.command == "converge":
        start = a.start_level if a.start_level is not None else (2 if a.problem == 2 else 1)
        if start < 1 or a.levels < start:
            parser.error(f"need 1 <= start-level <= levels, got {start}..{a.levels}")
        cfg.problem = a.problem
        cfg.bc = "displacement" if a.problem == 1 else "traction"
        cfg.levels = list(range(start, a.levels + 1))
    elif a.command == "infsup":
        cfg.bc, cfg.n, cfg.norm = a.bc, a.n, a.norm
        if any(n < 1 or n > 8 for n in a.n):
            parser.error("infsup needs 1 <= n <= 8")
        if a.norm == "mesh" and any(n % 2 for n in a.n):
            parser.error("mesh-dependent norms need even n")
    elif a.command == "kernel":
        cfg.bc, cfg.n = "traction", a.n
        if any(n < 2 or n % 2 for n in a.n):
            parser.error(f"kernel needs even n >= 2, got {a.n}")
    elif a.command == "export-basis":
        cfg.dim, cfg.element, cfg.plane = a.dim, a.element, a.plane
        if a.dim == 3:
            kmax = MAX_K_3D
        if a.element == "shear" and a.dim == 2 and a.family != "full":
            cfg.family = "full"
    elif a.command == "unisolvence":
        cfg.k = []
    if any(not 1 <= k <= kmax for k in cfg.k):
        parser.error(f"unsupported k {cfg.k}; supported 1..{kmax}")
    return cfg


def run(argv: list[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        out = COMMANDS[cfg.command](cfg)
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = render(cfg, out)
    path = output_path(cfg)
    if path is None:
        stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    return 0 if out.ok else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
