"""Command-line front end.

    curvmag <subcommand> --config path.json [--out dir]

Every config is validated in full before any computation; unknown keys
are rejected.  The report (report.json, schema curvmag-report/1) embeds the
normalised config and is byte-identical across runs; wall-clock timings
go to a separate timings.json.  Exit codes: 0 success, 2 validation
error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__
from .errors import CurvmagError, NumericalError, ValidationError
from .report import SCHEMA, dumps

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3


# ---- value converters ------------------------------------------------------------


def _int(v, name, lo=None):
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        else:
            raise ValidationError(f"{name} must be an integer")
    if lo is not None and v < lo:
        raise ValidationError(f"{name} must be >= {lo}")
    return v


def _number(v, name):
    """int or rational string -> Fraction, float stays float."""
    if isinstance(v, bool):
        raise ValidationError(f"{name} must be a number")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return v
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"{name}: cannot parse {v!r} as a rational") from None
    raise ValidationError(f"{name} must be a number")


def _bool(v, name):
    if not isinstance(v, bool):
        raise ValidationError(f"{name} must be true or false")
    return v


def _str(v, name):
    if not isinstance(v, str):
        raise ValidationError(f"{name} must be a string")
    return v


def _obj(v, name):
    if not isinstance(v, dict):
        raise ValidationError(f"{name} must be an object")
    return v


def _numlist(n):
    def conv(v, name):
        if not isinstance(v, list) or (n is not None and len(v) != n):
            raise ValidationError(f"{name} must be a list" + (f" of {n} numbers" if n else ""))
        return [_number(x, f"{name}[{i}]") for i, x in enumerate(v)]
    return conv


def _coeffs(v, name):
    if not isinstance(v, list) or not v:
        raise ValidationError(f"{name} must be a non-empty list")
    from .exactring import GaussianRational

    out = []
    for i, x in enumerate(v):
        if isinstance(x, bool):
            raise ValidationError(f"{name}[{i}] must be a number")
        try:
            out.append(str(GaussianRational.parse(x) if isinstance(x, str) else GaussianRational.coerce(x)))
        except (ValueError, TypeError, CurvmagError):
            raise ValidationError(f"{name}[{i}]: cannot parse {x!r}") from None
    return out


def _params_list(v, name):
    if not isinstance(v, list):
        raise ValidationError(f"{name} must be a list of {{p, q}} objects")
    out = []
    for i, item in enumerate(v):
        _obj(item, f"{name}[{i}]")
        if set(item) - {"p", "q"}:
            raise ValidationError(f"{name}[{i}] has unknown keys")
        out.append({"p": _coeffs([item.get("p", 0)], name)[0], "q": _coeffs([item.get("q", 0)], name)[0]})
    return out


_REQ = object()

# command -> key -> (converter, default)
SCHEMAS = {
    "monopole-spectrum": {"q": (lambda v, n: _int(v, n, 0), _REQ), "K": (_number, 1),
                          "m_max": (lambda v, n: _int(v, n, 0), 5)},
    "monopole-harmonic": {"q": (lambda v, n: _int(v, n, 0), _REQ), "m": (lambda v, n: _int(v, n, 0), _REQ),
                          "f": (_coeffs, ["1"]), "check_rank": (_bool, True)},
    "verify-intertwining": {"N_max": (lambda v, n: _int(v, n, 0), 5),
                            "factorisation_N_max": (lambda v, n: _int(v, n, 0), 8)},
    "verify-deformed": {"N_max": (lambda v, n: _int(v, n, 0), 4), "params": (_params_list, []),
                        "random": (lambda v, n: _int(v, n, 0), 0), "seed": (lambda v, n: _int(v, n, 0), 0)},
    "hyperbolic-levels": {"B": (_number, _REQ), "genus": (lambda v, n: _int(v, n, 2), 2),
                          "with_dims": (_bool, True), "ground_check_max": (lambda v, n: _int(v, n, 0), 0)},
    "flat-landau": {"B": (_number, _REQ), "m_max": (lambda v, n: _int(v, n, 0), 5), "flux": (None, None)},
    "sphere-numeric": {"q": (lambda v, n: _int(v, n), _REQ), "refinement": (lambda v, n: _int(v, n, 2), 5),
                       "k": (lambda v, n: _int(v, n, 1), 15), "potential": (_number, 0),
                       "kernel": (_bool, False), "gap_tol": (_number, Fraction(1, 10))},
    "torus-numeric": {"b": (lambda v, n: _int(v, n), _REQ), "n": (lambda v, n: _int(v, n, 3), 32),
                      "bloch": (_numlist(2), [0, 0]), "side": (_number, None),
                      "k": (lambda v, n: _int(v, n, 1), 12), "potential": (_number, 0),
                      "kernel": (_bool, False), "gap_tol": (_number, Fraction(1, 10))},
    "curvature": {"surface": (_obj, _REQ), "point": (_numlist(None), None)},
    "gauss-bonnet": {"surface": (_obj, _REQ)},
    "chain-classify": {"surface": (_obj, _REQ), "class": (_obj, _REQ),
                       "max_terms": (lambda v, n: _int(v, n, 2), 8)},
    "laplace-chain": {"surface": (_obj, _REQ), "class": (_obj, _REQ),
                      "steps": (lambda v, n: _int(v, n, 1), 1), "refinement": (None, None)},
    "quasi-cyclic": {"surface": (_obj, _REQ), "N": (lambda v, n: _int(v, n, 1), _REQ),
                     "b0": (lambda v, n: _int(v, n), _REQ), "run": (_bool, False)},
    "solve-liouville": {"surface": (_obj, _REQ), "c": (_number, _REQ), "refinement": (None, None),
                        "perturbation": (_number, 0), "seed": (lambda v, n: _int(v, n, 0), 0),
                        "tol": (_number, 1e-10)},
    "commutator": {"case": (_str, "liouville"), "f": (_str, "u**2 + 1"), "g": (_str, "v**2 + 2"),
                   "U": (_str, "x**2 + 1"), "V": (_str, "y**2 + 2"), "n": (lambda v, n: _int(v, n, 21), 121),
                   "trials": (lambda v, n: _int(v, n, 1), 5), "seed": (lambda v, n: _int(v, n, 0), 0)},
}

# optional integers that may be null
_NULLABLE_INT = {("flat-landau", "flux"), ("laplace-chain", "refinement"), ("solve-liouville", "refinement")}


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    params: dict

    def to_dict(self) -> dict:
        from .report import to_jsonable

        return {"command": self.command, **to_jsonable(self.params)}


def parse_config(raw: dict, command: str | None = None) -> ExperimentConfig:
    """Validate and normalise a raw JSON config."""
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")
    cmd = raw.get("command", command)
    if command is not None and cmd != command:
        raise ValidationError(f"config command {cmd!r} does not match subcommand {command!r}")
    if cmd not in SCHEMAS:
        raise ValidationError(f"unknown command {cmd!r}")
    schema = SCHEMAS[cmd]
    unknown = set(raw) - set(schema) - {"command"}
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    params = {}
    for key, (conv, default) in schema.items():
        if key not in raw:
            if default is _REQ:
                raise ValidationError(f"missing required key {key!r}")
            params[key] = default
            continue
        v = raw[key]
        if (cmd, key) in _NULLABLE_INT:
            params[key] = None if v is None else _int(v, key, 0)
        elif v is None and default is None:
            params[key] = None
        else:
            params[key] = conv(v, key)
    _semantic_checks(cmd, params)
    return ExperimentConfig(cmd, params)


def _semantic_checks(cmd, p):
    from .surface import surface_from_spec

    if "surface" in p:
        surface_from_spec(p["surface"])
    if "class" in p:
        from .gauge import GaugeClass

        GaugeClass.from_dict(p["class"])
    if cmd == "monopole-harmonic" and p["q"] % 2:
        raise ValidationError("the exact engine needs even q")
    if cmd == "commutator" and p["case"] not in ("liouville", "conformal"):
        raise ValidationError("case must be 'liouville' or 'conformal'")
    if cmd in ("sphere-numeric", "torus-numeric") and p["gap_tol"] <= 0:
        raise ValidationError("gap_tol must be positive")


# ---- command handlers --------------------------------------------------------------


def _monopole_spectrum(p):
    from .ladder import monopole_spectrum

    t = monopole_spectrum(p["q"], p["K"], p["m_max"])
    return {"table": t.to_dict()}, {"spectrum.csv": t.to_csv()}


def _monopole_harmonic(p):
    from .exactring import exact_rank
    from .ladder import harmonic_eigenvalue, monopole_harmonic

    q, m = p["q"], p["m"]
    psi = monopole_harmonic(q, m, p["f"])
    out = {"psi": psi.to_text(), "eigenvalue": harmonic_eigenvalue(q, m), "eigen_identity": True}
    if p["check_rank"]:
        N = m + q // 2
        basis = [monopole_harmonic(q, m, [0] * k + [1]) for k in range(2 * N + 1)]
        out["rank"] = exact_rank(basis)
        out["expected_rank"] = q + 2 * m + 1
    return out, {}


def _verify_intertwining(p):
    from .ladder import verify_factorisation, verify_intertwining

    inter = {str(N): verify_intertwining(N) for N in range(p["N_max"] + 1)}
    fact = {str(N): list(verify_factorisation(N)) for N in range(p["factorisation_N_max"] + 1)}
    ok = all(inter.values()) and all(all(v) for v in fact.values())
    return {"intertwining": inter, "factorisation": fact, "all_true": ok}, {}


def _random_params(n, seed):
    import random

    rng = random.Random(seed)

    def r():
        return Fraction(rng.randint(-9, 9), rng.randint(1, 5))

    out = []
    for _ in range(n):
        out.append({"p": str(r()), "q": f"{r()}{'+' if rng.random() < 0.5 else '-'}{abs(r())} i"})
    return out


def _verify_deformed(p):
    from .ladder import DeformationParams, deformed_verify

    plist = list(p["params"]) + _random_params(p["random"], p["seed"])
    if not plist:
        plist = [{"p": "1", "q": "0"}]
    rows = []
    for item in plist:
        par = DeformationParams(item["p"], item["q"])
        res = {str(N): deformed_verify(N, par) for N in range(p["N_max"] + 1)}
        rows.append({"p": item["p"], "q": item["q"], "holds": res})
    return {"cases": rows, "all_true": all(all(r["holds"].values()) for r in rows)}, {}


def _hyperbolic_levels(p):
    from .exactring import GaussianRational, apply
    from .ladder import hyperbolic_ground_state, hyperbolic_landau_op, hyperbolic_levels

    t = hyperbolic_levels(p["B"], p["genus"], p["with_dims"])
    out = {"table": t.to_dict()}
    if p["ground_check_max"]:
        checks = {}
        for B in range(1, p["ground_check_max"] + 1):
            L = hyperbolic_landau_op(B)
            checks[str(B)] = all(apply(L, hyperbolic_ground_state(B, k))
                                 == hyperbolic_ground_state(B, k) * GaussianRational(B)
                                 for k in range(p["ground_check_max"] + 1))
        out["ground_family"] = checks
    return out, {"spectrum.csv": t.to_csv()}


def _flat_landau(p):
    from .ladder import flat_landau_levels

    flux = p["flux"]
    t = flat_landau_levels(p["B"], p["m_max"], flux)
    return {"table": t.to_dict()}, {"spectrum.csv": t.to_csv()}


def _numeric_common(op, p):
    from .numeric.eigen import kernel_dimension, lowest_eigs

    res = lowest_eigs(op, p["k"])
    out = {"eigen": res.to_dict(), "dimension": op.dimension, "meta": op.meta,
           "total_flux": op.gauged.total_flux, "hermiticity_defect": op.hermiticity_defect()}
    if p["kernel"]:
        out["kernel_dimension"] = kernel_dimension(op, float(p["gap_tol"]), result=res)
    return out, {"eigenvalues.csv": res.to_csv()}


def _sphere_numeric(p):
    from .numeric.operator import build_sphere_monopole

    return _numeric_common(build_sphere_monopole(p["q"], p["refinement"], float(p["potential"])), p)


def _torus_numeric(p):
    import math

    from .numeric.operator import build_torus_landau

    side = 2 * math.pi if p["side"] is None else float(p["side"])
    op = build_torus_landau(p["b"], p["n"], tuple(float(t) for t in p["bloch"]), side, float(p["potential"]))
    return _numeric_common(op, p)


def _curvature(p):
    import numpy as np

    from .surface import (curvature_conformal, ellipsoid_curvature, liouville_curvature,
                          revolution_curvature_report, surface_from_spec)

    s = surface_from_spec(p["surface"])
    pt = [float(v) for v in p["point"]] if p["point"] is not None else None
    if s.kind == "ellipsoid":
        if pt is None:
            _, K = s.quadrature()
            return {"min": float(K.min()), "max": float(K.max())}, {}
        if len(pt) != 3:
            raise ValidationError("ellipsoid point needs 3 coordinates")
        return {"K": ellipsoid_curvature(s.params["a"], s.params["b"], s.params["c"], pt)}, {}
    if s.kind == "liouville":
        if pt is None or len(pt) != 2:
            raise ValidationError("liouville curvature needs point [u, v]")
        return {"K": liouville_curvature(s.params["f"], s.params["g"], *pt)}, {}
    if s.kind == "revolution":
        if pt is None or len(pt) != 1:
            raise ValidationError("revolution curvature needs point [z]")
        return revolution_curvature_report(s.params["rho"], pt[0]), {}
    vals = np.concatenate([curvature_conformal(c).values for c in s.charts])
    return {"min": float(vals.min()), "max": float(vals.max()), "nodes": int(vals.size),
            "nominal": s.constant_curvature}, {}


def _gauss_bonnet(p):
    from .surface import gauss_bonnet, surface_from_spec

    s = surface_from_spec(p["surface"])
    val = gauss_bonnet(s)
    return {"gauss_bonnet": val, "euler_characteristic": s.euler_characteristic,
            "error": abs(val - s.euler_characteristic)}, {}


def _chain_classify(p):
    from .gauge import GaugeClass, chain_classify
    from .surface import surface_from_spec

    s = surface_from_spec(p["surface"])
    r = chain_classify(GaugeClass.from_dict(p["class"]), s, p["max_terms"])
    return {"chain": r.to_dict(), "verified": r.verify(s)}, {}


def _laplace_chain(p):
    from .gauge import GaugeClass, flux
    from .laplace import laplace_step
    from .surface import surface_from_spec

    s = surface_from_spec(p["surface"])
    mesh = s.mesh(p["refinement"]) if p["refinement"] is not None else None
    cls = GaugeClass.from_dict(p["class"], mesh)
    classes = [cls]
    for _ in range(p["steps"]):
        classes.append(laplace_step(classes[-1], s, mesh))
    fl = [flux(c.B, s).value for c in classes]
    steps = []
    for c in classes:
        if c.B.tagged and c.U.tagged:
            steps.append(c.to_dict())
        else:
            steps.append({"B_mean": float(c.B.on_mesh(c.mesh).mean()), "U_mean": float(c.U.on_mesh(c.mesh).mean())})
    return {"steps": steps, "fluxes": fl, "increments": [b - a for a, b in zip(fl, fl[1:])],
            "expected_increment": -s.euler_characteristic}, {}


def _quasi_cyclic(p):
    from .laplace import predicted_dimensions, quasi_cyclic_constant, quasi_cyclic_feasible, run_quasi_cyclic
    from .surface import surface_from_spec

    s = surface_from_spec(p["surface"])
    g = s.genus
    c = quasi_cyclic_constant(p["b0"], p["N"], g, s.total_area, area_over_2pi=s.area_over_2pi, check=False)
    out = {"c": c, "admissible": bool(c > 0), "feasible": quasi_cyclic_feasible(p["b0"], p["N"], g),
           "dimensions": predicted_dimensions(p["b0"], p["N"], g)}
    if p["run"]:
        if p["N"] != 1 and s.constant_curvature != 0:
            raise ValidationError("run with a constant B0 is only quasi-cyclic for N = 1 or flat surfaces")
        B0 = c / 2 if p["N"] == 1 else c / 4
        out["chain"] = run_quasi_cyclic(p["b0"], p["N"], s, B0).to_dict()
    return out, {}


def _solve_liouville(p):
    import numpy as np

    from .laplace import solve_sinh_poisson
    from .surface import surface_from_spec

    s = surface_from_spec(p["surface"])
    mesh = s.mesh(p["refinement"])
    phi0 = None
    if p["perturbation"]:
        rng = np.random.default_rng(p["seed"])
        Kbar = mesh.integrate(mesh.curvature) / mesh.total_area
        base = np.log(max(float(p["c"]) + 2 * Kbar, 1e-6) / 4)
        phi0 = base + float(p["perturbation"]) * rng.standard_normal(mesh.n_vertices)
    st = solve_sinh_poisson(s, float(p["c"]), mesh=mesh, phi0=phi0, tol=float(p["tol"]))
    return {"solution": st.to_dict()}, {}


def _commutator(p):
    from .numeric.commutator import (Grid, commutator_residual, liouville_conformal_operators,
                                     liouville_uv_operators)

    if p["case"] == "liouville":
        g = Grid.box(2, 3, 0, 1, p["n"])
        lap, F = liouville_uv_operators(p["f"], p["g"], g)
        return {"F_vs_Delta": commutator_residual(F, lap, p["trials"], p["seed"]),
                "Delta_vs_Delta": commutator_residual(lap, lap, p["trials"], p["seed"])}, {}
    g = Grid.box(-0.5, 0.5, -0.5, 0.5, p["n"])
    o = liouville_conformal_operators(p["U"], p["V"], g)
    return {"F_vs_L": commutator_residual(o["F"], o["L"], p["trials"], p["seed"]),
            "Ftilde_vs_Ltilde": commutator_residual(o["F_tilde"], o["L_tilde"], p["trials"], p["seed"])}, {}


HANDLERS = {
    "monopole-spectrum": _monopole_spectrum,
    "monopole-harmonic": _monopole_harmonic,
    "verify-intertwining": _verify_intertwining,
    "verify-deformed": _verify_deformed,
    "hyperbolic-levels": _hyperbolic_levels,
    "flat-landau": _flat_landau,
    "sphere-numeric": _sphere_numeric,
    "torus-numeric": _torus_numeric,
    "curvature": _curvature,
    "gauss-bonnet": _gauss_bonnet,
    "chain-classify": _chain_classify,
    "laplace-chain": _laplace_chain,
    "quasi-cyclic": _quasi_cyclic,
    "solve-liouville": _solve_liouville,
    "commutator": _commutator,
}


def run(config: ExperimentConfig):
    """Execute a validated config; returns (report dict, csv files, timings)."""
    t0 = time.perf_counter()
    results, tables = HANDLERS[config.command](config.params)
    elapsed = time.perf_counter() - t0
    report = {"schema": SCHEMA, "version": __version__, "command": config.command,
              "config": config.to_dict(), "results": results}
    return report, tables, {"command": config.command, "seconds": elapsed}


def emit(report: dict, out_dir: Path, tables: dict | None = None, timings: dict | None = None) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    path = out_dir / "report.json"
    path.write_text(dumps(report), encoding="utf-8")
    written.append(path)
    for name, text in sorted((tables or {}).items()):
        tp = out_dir / name
        tp.write_text(text, encoding="utf-8")
        written.append(tp)
    if timings is not None:
        tp = out_dir / "timings.json"
        tp.write_text(dumps(timings), encoding="utf-8")
        written.append(tp)
    return written


def _set_threads():
    n = os.environ.get("CURVMAG_THREADS", "1")
    if not n.isdigit() or int(n) < 1:
        raise ValidationError("CURVMAG_THREADS must be a positive integer")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="curvmag", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"curvmag {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SCHEMAS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--out", type=Path, default=Path("curvmag-out"))
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    try:
        _set_threads()
        try:
            raw = json.loads(args.config.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}") from None
        cfg = parse_config(raw, args.command)
        report, tables, timings = run(cfg)
        for path in emit(report, args.out, tables, timings):
            print(path)
        return EXIT_OK
    except NumericalError as exc:
        print(f"curvmag: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CurvmagError as exc:
        print(f"curvmag: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, TypeError) as exc:
        print(f"curvmag: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"curvmag: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
