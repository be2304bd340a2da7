#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Reading and writing the JSON and CSV formats: system files, perturbation files, sequences, grids and reports.
"""

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .dichotomy import DichotomyConstants, SplittingTriple, WindowSystem
from .exceptions import ConfigurationError, StructuralError
from .seqspace import VecSeq, Window
from .shadow import PerturbationSeq

###############################################################################

log = logging.getLogger(__name__)

###############################################################################


def resolve_path(fp: Union[str, Path]) -> Path:
    # Fully resolve the path, it must exist
    fp = Path(fp).expanduser().resolve(strict=True)
    if fp.is_dir():
        raise IsADirectoryError(fp)
    return fp


def input_digest(fp: Union[str, Path]) -> str:
    """
    A short content hash followed by the file name, recorded in reports to tie results to their inputs.
    """
    fp = resolve_path(fp)
    short_hash = hashlib.sha256(fp.read_bytes()).hexdigest()[:16]
    return f"{short_hash}_{fp.name}"


def write_text(fp: Union[str, Path], text: str) -> Path:
    fp = Path(fp).expanduser().resolve()
    fp.parent.mkdir(parents=True, exist_ok=True)

    # Write next to the target then rename over it
    handle, temp = tempfile.mkstemp(dir=fp.parent, prefix=f".{fp.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, "w", newline="") as stream:
            stream.write(text)
        os.replace(temp, fp)
    except BaseException:
        if os.path.exists(temp):
            os.remove(temp)
        raise

    return fp


def read_json(fp: Union[str, Path]) -> Dict:
    with open(resolve_path(fp), "r") as stream:
        return json.load(stream)


def to_json_text(data: Dict) -> str:
    return json.dumps(data, indent=2, allow_nan=False, default=_json_default) + "\n"


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_json(fp: Union[str, Path], data: Dict) -> Path:
    return write_text(fp, to_json_text(data))


def write_frame(fp: Union[str, Path], frame: pd.DataFrame) -> Path:
    return write_text(fp, frame.to_csv(index=False, float_format="%.17g"))


def read_frame(fp: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(resolve_path(fp))


###############################################################################
# Per index matrices and vectors


def _index_entries(entries: List[Dict], window: Window, count: int, key: str, name: str) -> List:
    by_index = {}
    for entry in entries:
        if not isinstance(entry, dict) or "n" not in entry or key not in entry:
            raise ConfigurationError(f"Entries of '{name}' need 'n' and '{key}'. Received: {entry}")
        if entry["n"] in by_index:
            raise ConfigurationError(f"'{name}' lists index {entry['n']} twice")
        by_index[entry["n"]] = entry[key]

    expected = list(range(window.lo, window.lo + count))
    missing = [n for n in expected if n not in by_index]
    extra = sorted(n for n in by_index if n not in expected)
    if missing or extra:
        raise ConfigurationError(
            f"'{name}' must list every index in [{expected[0]}, {expected[-1]}]. Missing: {missing[:10]}, "
            f"unexpected: {extra[:10]}"
        )
    return [by_index[n] for n in expected]


def matrix_stack_from_config(entries: Union[Dict, List[Dict]], window: Window, count: int, name: str) -> np.ndarray:
    """
    Decode {"constant": true, "rows": [[...]]} or [{"n": ..., "rows": [[...]]}, ...] into an array (count, k, k) for
    indices window.lo, ..., window.lo + count - 1.
    """
    if isinstance(entries, dict):
        if not entries.get("constant", False) or "rows" not in entries:
            raise ConfigurationError(f"'{name}' must be a list of indexed entries or a constant entry with 'rows'")
        matrix = np.asarray(entries["rows"], dtype=float)
        stack = np.repeat(matrix[None], count, axis=0)
    elif isinstance(entries, list):
        stack = np.array(_index_entries(entries, window, count, "rows", name), dtype=float)
    else:
        raise ConfigurationError(f"'{name}' must be a list or a constant entry. Received: {type(entries).__name__}")

    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise StructuralError(f"'{name}' must hold square matrices. Received shape: {stack.shape[1:]}")
    return stack


def vector_stack_from_config(entries: Union[Dict, List[Dict]], window: Window, count: int, name: str) -> np.ndarray:
    """
    Decode {"constant": true, "values": [...]} or [{"n": ..., "values": [...]}, ...] into an array (count, k).
    """
    if isinstance(entries, dict):
        if not entries.get("constant", False) or "values" not in entries:
            raise ConfigurationError(f"'{name}' must be a list of indexed entries or a constant entry with 'values'")
        stack = np.repeat(np.asarray(entries["values"], dtype=float)[None], count, axis=0)
    elif isinstance(entries, list):
        stack = np.array(_index_entries(entries, window, count, "values", name), dtype=float)
    else:
        raise ConfigurationError(f"'{name}' must be a list or a constant entry. Received: {type(entries).__name__}")

    if stack.ndim != 2:
        raise StructuralError(f"'{name}' must hold vectors. Received shape: {stack.shape[1:]}")
    return stack


def matrix_stack_to_config(stack: np.ndarray, window: Window) -> Union[Dict, List[Dict]]:
    stack = np.asarray(stack, dtype=float)
    if np.all(stack == stack[0]):
        return {"constant": True, "rows": stack[0].tolist()}
    return [{"n": window.lo + p, "rows": matrix.tolist()} for p, matrix in enumerate(stack)]


def vector_stack_to_config(stack: np.ndarray, window: Window) -> Union[Dict, List[Dict]]:
    stack = np.asarray(stack, dtype=float)
    if np.all(stack == stack[0]):
        return {"constant": True, "values": stack[0].tolist()}
    return [{"n": window.lo + p, "values": vector.tolist()} for p, vector in enumerate(stack)]


###############################################################################
# Systems and splittings


def projections_from_config(config: Dict, window: Window, dim: int) -> SplittingTriple:
    """
    Decode {"P1": ..., "P2": ..., "P3": ...} in the matrix forms, or the shorthand {"coordinate": [s, u, c]}.
    """

    if not isinstance(config, dict):
        raise ConfigurationError(f"Projections must be an object. Received: {type(config).__name__}")

    if "coordinate" in config:
        stable, unstable, central = (int(v) for v in config["coordinate"])
        if stable + unstable + central != dim:
            raise StructuralError(f"Coordinate splitting {config['coordinate']} does not add up to dim {dim}")
        return SplittingTriple.coordinate(window, stable, unstable, central)

    try:
        stacks = [matrix_stack_from_config(config[name], window, window.length, name) for name in ("P1", "P2", "P3")]
    except KeyError as e:
        raise ConfigurationError(f"Projections are missing {e}")

    for stack in stacks:
        if stack.shape[1] != dim:
            raise StructuralError(f"Projections must be {dim} x {dim}. Received: {stack.shape[1:]}")
    return SplittingTriple(window, *stacks)


def projections_to_config(split: SplittingTriple) -> Dict:
    return {
        name: matrix_stack_to_config(split.stack(i), split.window)
        for i, name in ((1, "P1"), (2, "P2"), (3, "P3"))
    }


def system_from_config(config: Dict) -> Tuple[WindowSystem, SplittingTriple, Optional[DichotomyConstants]]:
    """
    Decode a system file into (WindowSystem, SplittingTriple, Optional[DichotomyConstants]).
    """

    try:
        window = Window.from_config(config["window"])
        dim = int(config["dim"])
        matrices = matrix_stack_from_config(config["A"], window, window.length - 1, "A")
        split = projections_from_config(config["projections"], window, dim)
    except KeyError as e:
        raise ConfigurationError(f"System files are missing {e}")

    if matrices.shape[1] != dim:
        raise StructuralError(f"System matrices must be {dim} x {dim}. Received: {matrices.shape[1:]}")

    constants = None
    if config.get("constants") is not None:
        constants = DichotomyConstants.from_dict(config["constants"])

    return WindowSystem(window, matrices), split, constants


def system_to_config(
    sys: WindowSystem, split: SplittingTriple, constants: Optional[DichotomyConstants] = None
) -> Dict:
    config = {
        "window": sys.window.to_config(),
        "dim": sys.dim,
        "A": matrix_stack_to_config(sys.matrices, sys.window),
        "projections": projections_to_config(split),
    }
    if constants is not None:
        config["constants"] = constants.to_dict()
    return config


def load_system(fp: Union[str, Path]) -> Tuple[WindowSystem, SplittingTriple, Optional[DichotomyConstants]]:
    return system_from_config(read_json(fp))


###############################################################################
# Perturbations


def perturbation_from_config(config: Dict, window: Window, dim: int) -> PerturbationSeq:
    """
    Decode {"kind": "zero"}, {"kind": "affine", "B", "v", ["lip_c"]} or {"kind": "tanh", "kappa", "W", ["offset"],
    ["lip_c"]} into a PerturbationSeq on the window.
    """

    if not isinstance(config, dict) or "kind" not in config:
        raise ConfigurationError(f"Perturbations need a 'kind'. Received: {config}")

    kind = config["kind"]
    count = window.length - 1
    if kind == "zero":
        return PerturbationSeq.zero(window, dim)

    if kind == "affine":
        B = matrix_stack_from_config(config.get("B", {"constant": True, "rows": np.zeros((dim, dim)).tolist()}),
                                     window, count, "B")
        v = None
        if "v" in config:
            v = vector_stack_from_config(config["v"], window, count, "v")
        f = PerturbationSeq.affine(window, B, v, lip_c=config.get("lip_c"))

    elif kind == "tanh":
        if "kappa" not in config or "W" not in config:
            raise ConfigurationError("Tanh perturbations need 'kappa' and 'W'.")
        W = matrix_stack_from_config(config["W"], window, count, "W")
        offset = None
        if "offset" in config:
            offset = vector_stack_from_config(config["offset"], window, count, "offset")
        f = PerturbationSeq.tanh(window, float(config["kappa"]), W, offset, lip_c=config.get("lip_c"))

    else:
        raise ConfigurationError(f"Unknown perturbation kind '{kind}'. Available: 'zero', 'affine', 'tanh'")

    if f.dim != dim:
        raise StructuralError(f"Perturbation dimension {f.dim} does not match the system dimension {dim}")
    return f


def perturbation_to_config(f: PerturbationSeq) -> Dict:
    if f.kind == "zero":
        return {"kind": "zero"}

    params = f.params
    if f.kind == "affine":
        return {
            "kind": "affine",
            "B": matrix_stack_to_config(params["B"], f.window),
            "v": vector_stack_to_config(params["v"], f.window),
            "lip_c": f.lip_c,
        }
    if f.kind == "tanh":
        return {
            "kind": "tanh",
            "kappa": float(params["kappa"]),
            "W": matrix_stack_to_config(params["W"], f.window),
            "offset": vector_stack_to_config(params["offset"], f.window),
            "lip_c": f.lip_c,
        }
    raise ConfigurationError("Custom perturbations can not be written to a configuration.")


def load_perturbation(fp: Union[str, Path], window: Window, dim: int) -> PerturbationSeq:
    return perturbation_from_config(read_json(fp), window, dim)


###############################################################################
# Sequences, grids and dense matrices


def load_sequence(fp: Union[str, Path], window: Optional[Window] = None, dim: Optional[int] = None) -> VecSeq:
    return VecSeq.from_frame(read_frame(fp), window=window, dim=dim)


def save_sequence(fp: Union[str, Path], seq: VecSeq) -> Path:
    return write_frame(fp, seq.to_frame())


def grid_from_config(config: Dict, dim: int) -> Tuple[List[Tuple[int, np.ndarray]], Optional[List[float]]]:
    """
    Decode {"points": [{"m": 0, "y": [...]}, ...], ["radii": [...]]}.
    """
    if not isinstance(config, dict) or not isinstance(config.get("points"), list):
        raise ConfigurationError("Grid files need a 'points' list.")

    points = []
    for point in config["points"]:
        try:
            m, y = int(point["m"]), np.asarray(point["y"], dtype=float)
        except (KeyError, TypeError):
            raise ConfigurationError(f"Grid points need 'm' and 'y'. Received: {point}")
        if y.shape != (dim,):
            raise StructuralError(f"Grid point vectors must have {dim} entries. Received: {y.tolist()}")
        points.append((m, y))

    radii = config.get("radii")
    return points, [float(r) for r in radii] if radii is not None else None


def grid_to_config(points: List[Tuple[int, np.ndarray]], radii: Optional[List[float]] = None) -> Dict:
    config = {"points": [{"m": int(m), "y": [float(v) for v in y]} for m, y in points]}
    if radii is not None:
        config["radii"] = [float(r) for r in radii]
    return config


def load_grid(fp: Union[str, Path], dim: int):
    return grid_from_config(read_json(fp), dim)


def dense_to_frame(matrix: np.ndarray, window: Window, dim: int) -> pd.DataFrame:
    """
    Dense operator matrices as a frame whose rows and columns are labelled n:i.
    """
    labels = [f"{n}:{i}" for n in window for i in range(dim)]
    return pd.DataFrame(matrix, index=pd.Index(labels, name="row"), columns=labels).reset_index()
