"""JSON serialization of channels, unitaries, trajectories and model specs.

Complex entries are written as ``[re, im]`` pairs in row-major nested arrays.
Python's float ``repr`` round-trips exactly, so ``load(save(x))`` is bitwise
equal for finite entries, and identical inputs always produce identical bytes.
"""

from __future__ import annotations

import json
import os
import tempfile
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator
from referencing import Registry, Resource

from .core import (
    CONVENTION,
    DEFAULT_TOL,
    UNITARY_TOL,
    ChannelTrajectory,
    ChoiMatrix,
    hermiticity_defect,
    trace_out,
)
from .errors import ParseError, ShapeError, ValidationError
from .gatelab import NAMED_OPERATORS, FluctuationSpec, HamiltonianSpec, LindbladSpec, PauliTerm, embed

FORMAT_VERSION = 1
SCHEMAS = ("channel_file.v1.json", "model_spec.v1.json", "observables.v1.json", "bench_report.v1.json")


@lru_cache(maxsize=None)
def _registry() -> tuple[Registry, dict]:
    docs = {}
    for name in SCHEMAS:
        docs[name] = json.loads(resources.files("qcbench.schemas").joinpath(name).read_text())
    registry = Registry().with_resources((d["$id"], Resource.from_contents(d)) for d in docs.values())
    return registry, docs


def _json_path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def validate_schema(doc, schema_name: str, source: str = "document") -> None:
    """Raise :class:`ParseError` naming the JSON path of the first violation."""
    registry, docs = _registry()
    validator = Draft202012Validator(docs[schema_name], registry=registry)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        e = errors[0]
        raise ParseError(f"{source}: {_json_path(e.absolute_path)}: {e.message}")


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(rows, path: str = "$") -> np.ndarray:
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ParseError(f"{path}: matrix must be square, got {n} rows of lengths {sorted({len(r) for r in rows})}")
    a = np.array(rows, dtype=float)
    out = np.empty(a.shape[:2], dtype=complex)
    out.real, out.imag = a[..., 0], a[..., 1]
    return out


@dataclass(frozen=True, eq=False)
class ChannelFile:
    """In-memory form of a channel file.

    ``data`` is a :class:`ChoiMatrix` (kind ``choi``), a unitary ndarray (kind
    ``unitary``) or a :class:`ChannelTrajectory` (kind ``trajectory``).
    """

    kind: str
    data: object
    n_qubits: int | None = None
    metadata: dict = field(default_factory=dict)

    @classmethod
    def of(cls, data, n_qubits: int | None = None, metadata: dict | None = None) -> "ChannelFile":
        if isinstance(data, ChoiMatrix):
            kind = "choi"
        elif isinstance(data, ChannelTrajectory):
            kind = "trajectory"
        else:
            data = np.asarray(data, dtype=complex)
            kind = "unitary"
            if n_qubits is None:
                n_qubits = int(round(np.log2(data.shape[0])))
        return cls(kind, data, n_qubits, dict(metadata or {}))

    def to_dict(self) -> dict:
        doc = {"format_version": FORMAT_VERSION, "kind": self.kind, "convention": CONVENTION}
        if self.kind == "choi":
            doc["d"] = self.data.d
            doc["entries"] = matrix_to_json(self.data.mat)
        elif self.kind == "unitary":
            doc["n_qubits"] = self.n_qubits
            doc["entries"] = matrix_to_json(self.data)
        else:
            doc["d"] = self.data.d
            doc["times"] = list(self.data.times)
            doc["samples"] = [matrix_to_json(c.mat) for c in self.data.chois]
        if self.metadata:
            doc["metadata"] = self.metadata
        return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, allow_nan=False, separators=(",", ":")) + "\n"


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file so readers never see partial output."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save(path, obj, metadata: dict | None = None) -> None:
    cf = obj if isinstance(obj, ChannelFile) else ChannelFile.of(obj, metadata=metadata)
    write_atomic(path, dumps(cf.to_dict()))


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc


def _report(msg: str, strict: bool) -> None:
    if strict:
        raise ValidationError(msg)
    warnings.warn(msg, stacklevel=3)


def check_choi(c: ChoiMatrix, tol: float = DEFAULT_TOL, strict: bool = False, where: str = "channel") -> None:
    """Hermiticity, complete positivity and trace preservation (``trace_out = 1``)."""
    herm = hermiticity_defect(c.mat)
    if herm > tol:
        _report(f"{where}: Hermiticity check failed, max |C - C^dagger| = {herm:.3e}", strict)
    lam = float(np.linalg.eigvalsh((c.mat + c.mat.conj().T) / 2)[0])
    if lam < -tol:
        _report(f"{where}: CP check failed, min eigenvalue {lam:.3e}", strict)
    tp = float(np.linalg.norm(trace_out(c) - np.eye(c.d)))
    if tp > tol:
        _report(f"{where}: trace_out check failed (trace preservation), ||trace_out - 1||_2 = {tp:.3e}", strict)


def load(path, strict: bool = False, tol: float = DEFAULT_TOL) -> ChannelFile:
    doc = _read_json(path)
    validate_schema(doc, "channel_file.v1.json", str(path))
    kind = doc["kind"]
    meta = doc.get("metadata", {})
    if kind == "unitary":
        u = matrix_from_json(doc["entries"], "$.entries")
        n = doc["n_qubits"]
        if u.shape[0] != 2**n:
            raise ParseError(f"{path}: $.entries: dimension {u.shape[0]} does not match n_qubits={n}")
        defect = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
        if defect > UNITARY_TOL:
            _report(f"{path}: unitarity check failed, max |u^dagger u - 1| = {defect:.3e}", strict)
        return ChannelFile("unitary", u, n, meta)
    d = doc["d"]
    if kind == "choi":
        c = _choi_from(doc["entries"], d, "$.entries", path)
        check_choi(c, tol, strict, str(path))
        return ChannelFile("choi", c, None, meta)
    times, samples = doc["times"], doc["samples"]
    if len(times) != len(samples):
        raise ParseError(f"{path}: $.samples: {len(samples)} samples for {len(times)} times")
    chois = []
    for i, rows in enumerate(samples):
        c = _choi_from(rows, d, f"$.samples[{i}]", path)
        check_choi(c, tol, strict, f"{path} sample {i}")
        chois.append(c)
    try:
        traj = ChannelTrajectory(tuple(times), tuple(chois))
    except (ValidationError, ShapeError) as exc:
        raise ParseError(f"{path}: $.times: {exc}") from exc
    return ChannelFile("trajectory", traj, None, meta)


def _choi_from(rows, d, where, path) -> ChoiMatrix:
    m = matrix_from_json(rows, where)
    if m.shape[0] != d * d:
        raise ParseError(f"{path}: {where}: Choi matrix of size {m.shape[0]} does not match d={d}")
    return ChoiMatrix(m)


# --------------------------------------------------------------------------
# model specs


def load_model_spec(path) -> dict:
    doc = _read_json(path)
    validate_schema(doc, "model_spec.v1.json", str(path))
    return doc


def hamiltonian_from_doc(doc: dict) -> HamiltonianSpec:
    terms = tuple(PauliTerm(t["coefficient"], tuple(tuple(f) for f in t["factors"])) for t in doc["terms"])
    return HamiltonianSpec(doc["n_qubits"], terms)


def lindblad_from_doc(doc: dict) -> LindbladSpec:
    n = doc["n_qubits"]
    jumps = []
    for j, jump in enumerate(doc.get("jumps", [])):
        op = jump["operator"]
        if "matrix" in op:
            mat = matrix_from_json(op["matrix"], f"$.jumps[{j}].operator.matrix")
        else:
            if op["qubit"] >= n:
                raise ValidationError(f"$.jumps[{j}].operator.qubit: {op['qubit']} out of range")
            mat = embed(NAMED_OPERATORS[op["name"]], op["qubit"], n)
        jumps.append((mat, jump["rate"]))
    return LindbladSpec(hamiltonian_from_doc(doc), tuple(jumps))


def fluctuation_from_doc(doc: dict, seed: int | None = None) -> FluctuationSpec:
    fl = tuple((f["term"], f["sigma"]) for f in doc.get("fluctuations", []))
    if seed is None:
        seed = doc.get("seed", 0)
    return FluctuationSpec(hamiltonian_from_doc(doc), fl, doc.get("samples", 1000), seed)


def load_observables(path) -> list[tuple[ChoiMatrix | None, np.ndarray]]:
    """Observable list; ``channel`` paths are resolved relative to the file."""
    doc = _read_json(path)
    validate_schema(doc, "observables.v1.json", str(path))
    base = Path(path).parent
    out = []
    for i, item in enumerate(doc["observables"]):
        x = matrix_from_json(item["observable"], f"$.observables[{i}].observable")
        ch = None
        if "channel" in item:
            cf = load(base / item["channel"])
            if cf.kind != "choi":
                raise ParseError(f"{path}: $.observables[{i}].channel: expected a choi file, got {cf.kind}")
            ch = cf.data
        out.append((ch, x))
    return out
