"""
Instance and candidate files (JSON, schema version 1)
"""

import json
import logging
from pathlib import Path
from typing import Union

import numpy as np

from config import IO_CONFIG
from trsc.builder import PiecewiseFromPsi, PiecewisePsi
from trsc.convexlib import (
    ConvexOracle, ConvexScalar, CubicPoly, PowerLaw, Quadratic, QuadraticOracle, QuarticExample1,
    ScalarOracle, TrscInstance, TrslInstance,
)
from trsc.errors import InstanceFormatError, TrscError

logger = logging.getLogger(__name__)

Instance = Union[TrslInstance, TrscInstance]


def _floats(values) -> list:
    arr = np.asarray(values, dtype=float)
    return arr.tolist()


# ===== ENCODE =====

def scalar_to_dict(f: ConvexScalar) -> dict:
    if isinstance(f, Quadratic):
        return {"kind": f.kind, "alpha": f.alpha, "beta": f.beta}
    if isinstance(f, PowerLaw):
        return {"kind": f.kind, "alpha": f.alpha, "d": f.d}
    if isinstance(f, CubicPoly):
        return {"kind": f.kind, "alpha": f.alpha, "beta": f.beta, "gamma": f.gamma}
    if isinstance(f, QuarticExample1):
        return {"kind": f.kind}
    if isinstance(f, PiecewiseFromPsi):
        return {"kind": f.kind, "a": f.a, "b": f.b, **f.psi.to_dict()}
    raise InstanceFormatError(f"cannot serialize f0 of type {type(f).__name__}")


def oracle_to_dict(o: ConvexOracle) -> dict:
    if isinstance(o, QuadraticOracle):
        return {"kind": "quadratic_form", "Q": _floats(o.Q), "q": _floats(o.q), "r": o.r}
    if isinstance(o, ScalarOracle):
        return {"kind": "scalar", "f0": scalar_to_dict(o.f)}
    raise InstanceFormatError(f"cannot serialize oracle of type {type(o).__name__}")


def instance_to_dict(inst: Instance) -> dict:
    """Fixed key order; floats keep their shortest round-trip repr"""
    head = {
        "schema_version": IO_CONFIG["schema_version"],
        "kind": "trsl" if isinstance(inst, TrslInstance) else "trsc",
        "name": inst.name,
        "n": int(inst.n),
        "H": _floats(inst.H),
        "c": _floats(inst.c),
    }
    if isinstance(inst, TrslInstance):
        head["constraint"] = {"a": inst.a, "b": inst.b}
        head["f0"] = scalar_to_dict(inst.f0)
    else:
        head["m"] = int(inst.m)
        head["f0"] = oracle_to_dict(inst.f0_vec)
        head["constraints"] = [oracle_to_dict(f) for f in inst.constraints]
        head["y_start"] = _floats(inst.y_start)
    return head


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=IO_CONFIG["indent"]) + "\n"


def save_instance(inst: Instance, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_instance(inst))
    logger.info(f"Saved instance '{inst.name}' to {path}")
    return path


# ===== DECODE =====

def scalar_from_dict(data: dict) -> ConvexScalar:
    kind = data["kind"]
    if kind == "quadratic":
        return Quadratic(data["alpha"], data.get("beta", 0.0))
    if kind == "power_law":
        return PowerLaw(data["alpha"], data["d"])
    if kind == "cubic":
        return CubicPoly(data["alpha"], data["beta"], data.get("gamma", 0.0))
    if kind == "quartic_example1":
        return QuarticExample1()
    if kind == "piecewise_from_psi":
        return PiecewiseFromPsi(PiecewisePsi.from_dict(data), data.get("a", 1.0), data.get("b", 0.0))
    raise InstanceFormatError(f"unknown f0 kind '{kind}'")


def oracle_from_dict(data: dict) -> ConvexOracle:
    kind = data["kind"]
    if kind == "quadratic_form":
        return QuadraticOracle(np.asarray(data["Q"], dtype=float), data["q"], data.get("r", 0.0))
    if kind == "scalar":
        return ScalarOracle(scalar_from_dict(data["f0"]))
    raise InstanceFormatError(f"unknown oracle kind '{kind}'")


def instance_from_dict(data: dict) -> Instance:
    try:
        version = data["schema_version"]
        if version != IO_CONFIG["schema_version"]:
            raise InstanceFormatError(f"unsupported schema_version {version}")
        n = int(data["n"])
        H = np.asarray(data["H"], dtype=float)
        c = np.asarray(data["c"], dtype=float)
        if H.shape != (n, n) or c.shape != (n,):
            raise InstanceFormatError(f"H is {H.shape} and c is {c.shape}, expected n={n}")
        asym = float(np.abs(H - H.T).max()) if n else 0.0
        if asym > IO_CONFIG["symmetry_tol"] * max(1.0, float(np.abs(H).max())):
            raise InstanceFormatError(f"H is not symmetric (max |H - H^T| = {asym:.3e})")

        kind = data.get("kind", "trsl")
        name = data.get("name", "")
        if kind == "trsl":
            con = data["constraint"]
            return TrslInstance(H, c, con["a"], con["b"], scalar_from_dict(data["f0"]), name=name)
        if kind == "trsc":
            constraints = tuple(oracle_from_dict(o) for o in data["constraints"])
            return TrscInstance(H, c, oracle_from_dict(data["f0"]), constraints,
                                y_start=data.get("y_start"), name=name)
        raise InstanceFormatError(f"unknown instance kind '{kind}'")
    except InstanceFormatError:
        raise
    except (KeyError, TypeError, ValueError, TrscError) as exc:
        raise InstanceFormatError(f"invalid instance: {exc!r}") from exc


def load_instance(path) -> Instance:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceFormatError(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InstanceFormatError(f"{path}: top level must be an object")
    inst = instance_from_dict(data)
    if not inst.name:
        object.__setattr__(inst, "name", path.stem)
    logger.debug(f"Loaded {path} (n={inst.n})")
    return inst


# ===== CANDIDATES =====

def save_candidate(path, x, y, mus) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"x": _floats(np.atleast_1d(x)), "y": _floats(np.atleast_1d(y)),
               "mus": _floats(np.atleast_1d(mus))}
    path.write_text(json.dumps(payload, indent=IO_CONFIG["indent"]) + "\n")
    return path


def load_candidate(path) -> dict:
    """{"x": [...], "y": [...], "mus": [...]} as numpy arrays"""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
        return {key: np.atleast_1d(np.asarray(data[key], dtype=float)) for key in ("x", "y", "mus")}
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"cannot read candidate {path}: {exc!r}") from exc
