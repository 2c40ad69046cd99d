"""Text/CSV serialization for matrices, ensembles, traces and sweep results.

All writers are atomic (write to a temp file, then rename) and emit floats
with 17 significant digits so every file round-trips bit-exactly through the
matching reader.  Lines starting with ``#`` are comments; writers use them
for schema versions and run provenance.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ParseError
from .recurrence import RecurrenceEstimate
from .spinmodel import CoherenceTrace, ModelParams, SpinEnsemble
from .sweep import CellStats

HERMITICITY_TOL = 1e-12


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _meta_lines(schema: str, meta: dict | None) -> list[str]:
    lines = [f"# spincoh {schema}"]
    if meta:
        lines.append("# config: " + json.dumps(meta, sort_keys=True))
    return lines


def _data_lines(path: str | os.PathLike) -> list[str]:
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return [ln.strip() for ln in raw.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


# ---------------------------------------------------------------------------
# density matrices: "dim N" then N*N rows "i j re im" (row-major)

def write_density_matrix(path: str | os.PathLike, rho: np.ndarray) -> None:
    rho = np.asarray(rho, dtype=complex)
    n = rho.shape[0]
    lines = [f"dim {n}"]
    for i in range(n):
        for j in range(n):
            lines.append(f"{i} {j} {_fmt(rho[i, j].real)} {_fmt(rho[i, j].imag)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_density_matrix(path: str | os.PathLike) -> np.ndarray:
    """Parse a matrix file, rejecting non-Hermitian content beyond 1e-12."""
    lines = _data_lines(path)
    if not lines or not lines[0].startswith("dim"):
        raise ParseError(f"{path}: expected first line 'dim N'")
    parts = lines[0].split()
    if len(parts) != 2:
        raise ParseError(f"{path}: malformed dim line {lines[0]!r}")
    try:
        n = int(parts[1])
    except ValueError as exc:
        raise ParseError(f"{path}: malformed dimension {parts[1]!r}") from exc
    if n < 1:
        raise ParseError(f"{path}: dimension must be >= 1, got {n}")
    if len(lines) - 1 != n * n:
        raise ParseError(f"{path}: expected {n * n} entry lines, found {len(lines) - 1}")
    rho = np.zeros((n, n), dtype=complex)
    seen = np.zeros((n, n), dtype=bool)
    for ln in lines[1:]:
        fields = ln.split()
        if len(fields) != 4:
            raise ParseError(f"{path}: malformed entry line {ln!r}")
        try:
            i, j = int(fields[0]), int(fields[1])
            re, im = float(fields[2]), float(fields[3])
        except ValueError as exc:
            raise ParseError(f"{path}: malformed entry line {ln!r}") from exc
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(f"{path}: index ({i}, {j}) out of range for dim {n}")
        if seen[i, j]:
            raise ParseError(f"{path}: duplicate entry for ({i}, {j})")
        seen[i, j] = True
        rho[i, j] = complex(re, im)
    herm_dev = float(np.max(np.abs(rho - rho.conj().T)))
    if herm_dev > HERMITICITY_TOL:
        raise ParseError(f"{path}: matrix is not Hermitian (max deviation {herm_dev:.3e})")
    return rho


# ---------------------------------------------------------------------------
# coherence traces: CSV header "t,xi_re" (plus optional extra columns)

def write_trace_csv(
    path: str | os.PathLike,
    trace: CoherenceTrace,
    meta: dict | None = None,
    oracle_dev: np.ndarray | None = None,
) -> None:
    buf = _io.StringIO()
    for ln in _meta_lines("trace v1", meta):
        buf.write(ln + "\n")
    if oracle_dev is None:
        buf.write("t,xi_re\n")
        for t, v in zip(trace.times, trace.values):
            buf.write(f"{_fmt(t)},{_fmt(v)}\n")
    else:
        buf.write("t,xi_re,oracle_dev\n")
        for t, v, d in zip(trace.times, trace.values, oracle_dev):
            buf.write(f"{_fmt(t)},{_fmt(v)},{_fmt(d)}\n")
    atomic_write_text(path, buf.getvalue())


def read_trace_csv(path: str | os.PathLike) -> CoherenceTrace:
    lines = _data_lines(path)
    if not lines:
        raise ParseError(f"{path}: empty trace file")
    header = lines[0].split(",")
    if header[:2] != ["t", "xi_re"]:
        raise ParseError(f"{path}: expected header 't,xi_re', got {lines[0]!r}")
    times, values = [], []
    for ln in lines[1:]:
        fields = ln.split(",")
        if len(fields) < 2:
            raise ParseError(f"{path}: malformed row {ln!r}")
        try:
            times.append(float(fields[0]))
            values.append(float(fields[1]))
        except ValueError as exc:
            raise ParseError(f"{path}: malformed row {ln!r}") from exc
    try:
        return CoherenceTrace(times=np.array(times), values=np.array(values))
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# ensembles: key/value header plus one position row per particle

def write_ensemble(path: str | os.PathLike, ensemble: SpinEnsemble, meta: dict | None = None) -> None:
    p = ensemble.params
    buf = _io.StringIO()
    for ln in _meta_lines("ensemble v1", meta):
        buf.write(ln + "\n")
    buf.write(f"n_particles {p.n_particles}\n")
    buf.write(f"dimension {p.dimension}\n")
    buf.write(f"epsilon {_fmt(p.epsilon)}\n")
    buf.write(f"eta {_fmt(p.eta)}\n")
    buf.write(f"density {_fmt(p.density)}\n")
    buf.write(f"seed {ensemble.seed}\n")
    for row in ensemble.positions:
        buf.write(" ".join(_fmt(x) for x in row) + "\n")
    atomic_write_text(path, buf.getvalue())


def read_ensemble(path: str | os.PathLike) -> SpinEnsemble:
    """Rebuild an ensemble from stored positions (couplings are recomputed).

    The initial state is the full superposition; amplitude sets are not part
    of the file format.
    """
    lines = _data_lines(path)
    keys = ("n_particles", "dimension", "epsilon", "eta", "density", "seed")
    header: dict[str, str] = {}
    if len(lines) < len(keys):
        raise ParseError(f"{path}: truncated ensemble header")
    for key, ln in zip(keys, lines):
        parts = ln.split()
        if len(parts) != 2 or parts[0] != key:
            raise ParseError(f"{path}: expected '{key} <value>', got {ln!r}")
        header[key] = parts[1]
    try:
        n = int(header["n_particles"])
        d = int(header["dimension"])
        params = ModelParams(
            n_particles=n,
            dimension=d,
            epsilon=float(header["epsilon"]),
            eta=float(header["eta"]),
            density=float(header["density"]),
        )
        seed = int(header["seed"])
    except ValueError as exc:
        raise ParseError(f"{path}: malformed header value: {exc}") from exc
    rows = lines[len(keys):]
    if len(rows) != n:
        raise ParseError(f"{path}: expected {n} position rows, found {len(rows)}")
    positions = np.empty((n, d))
    for i, ln in enumerate(rows):
        fields = ln.split()
        if len(fields) != d:
            raise ParseError(f"{path}: position row {i} has {len(fields)} fields, expected {d}")
        try:
            positions[i] = [float(x) for x in fields]
        except ValueError as exc:
            raise ParseError(f"{path}: malformed position row {ln!r}") from exc
    diff = positions[:, None, :] - positions[None, :, :]
    r = np.sqrt((diff**2).sum(axis=-1))
    np.fill_diagonal(r, 1.0)
    couplings = params.eta / r**params.epsilon
    np.fill_diagonal(couplings, 0.0)
    return SpinEnsemble(params=params, positions=positions, couplings=couplings, seed=seed)


# ---------------------------------------------------------------------------
# sweep outputs

RUNS_HEADER = ["N", "D", "epsilon", "run", "seed", "t_d", "C", "c", "chi_sq", "weight", "log10_tp", "converged"]
CELLS_HEADER = [
    "N", "D", "epsilon", "runs", "failed",
    "t_d_mean", "t_d_std", "C_mean", "C_std", "c_mean", "c_std", "log10_tp_mean",
]


def write_runs_csv(path: str | os.PathLike, results: list[CellStats], meta: dict | None = None) -> None:
    buf = _io.StringIO()
    for ln in _meta_lines("sweep-runs v1", meta):
        buf.write(ln + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RUNS_HEADER)
    for stats in results:
        cell = stats.cell
        for rec in stats.records:
            base = [cell.n_particles, cell.dimension, _fmt(cell.epsilon), rec.run, rec.seed]
            if rec.fit is None:
                writer.writerow(base + ["", "", "", "", "", "", ""])
            else:
                f = rec.fit
                weight = "inf" if math.isinf(f.weight) else _fmt(f.weight)
                writer.writerow(
                    base
                    + [
                        _fmt(f.t_d), _fmt(f.exponent), _fmt(f.floor), _fmt(f.chi_sq),
                        weight, _fmt(rec.log10_tp), str(f.converged).lower(),
                    ]
                )
    atomic_write_text(path, buf.getvalue())


def read_runs_csv(path: str | os.PathLike) -> list[dict]:
    lines = _data_lines(path)
    if not lines or lines[0].split(",") != RUNS_HEADER:
        raise ParseError(f"{path}: bad or missing runs header")
    rows = []
    for ln in lines[1:]:
        fields = next(csv.reader([ln]))
        if len(fields) != len(RUNS_HEADER):
            raise ParseError(f"{path}: malformed row {ln!r}")
        try:
            row = {
                "N": int(fields[0]),
                "D": int(fields[1]),
                "epsilon": float(fields[2]),
                "run": int(fields[3]),
                "seed": int(fields[4]),
            }
            if fields[5] == "":
                row.update(t_d=None, C=None, c=None, chi_sq=None, weight=None, log10_tp=None, converged=None)
            else:
                row.update(
                    t_d=float(fields[5]),
                    C=float(fields[6]),
                    c=float(fields[7]),
                    chi_sq=float(fields[8]),
                    weight=float(fields[9]),
                    log10_tp=float(fields[10]),
                    converged=fields[11] == "true",
                )
        except ValueError as exc:
            raise ParseError(f"{path}: malformed row {ln!r}") from exc
        rows.append(row)
    return rows


def write_cells_csv(path: str | os.PathLike, results: list[CellStats], meta: dict | None = None) -> None:
    buf = _io.StringIO()
    for ln in _meta_lines("sweep-cells v1", meta):
        buf.write(ln + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CELLS_HEADER)
    for s in results:
        writer.writerow(
            [
                s.cell.n_particles, s.cell.dimension, _fmt(s.cell.epsilon),
                s.cell.runs, s.n_failed,
                _fmt(s.t_d_mean), _fmt(s.t_d_std),
                _fmt(s.exponent_mean), _fmt(s.exponent_std),
                _fmt(s.floor_mean), _fmt(s.floor_std),
                _fmt(s.log10_tp_mean),
            ]
        )
    atomic_write_text(path, buf.getvalue())


def read_cells_csv(path: str | os.PathLike) -> list[dict]:
    lines = _data_lines(path)
    if not lines or lines[0].split(",") != CELLS_HEADER:
        raise ParseError(f"{path}: bad or missing cells header")
    rows = []
    for ln in lines[1:]:
        fields = next(csv.reader([ln]))
        if len(fields) != len(CELLS_HEADER):
            raise ParseError(f"{path}: malformed row {ln!r}")
        try:
            rows.append(
                {
                    "N": int(fields[0]),
                    "D": int(fields[1]),
                    "epsilon": float(fields[2]),
                    "runs": int(fields[3]),
                    "failed": int(fields[4]),
                    "t_d_mean": float(fields[5]),
                    "t_d_std": float(fields[6]),
                    "C_mean": float(fields[7]),
                    "C_std": float(fields[8]),
                    "c_mean": float(fields[9]),
                    "c_std": float(fields[10]),
                    "log10_tp_mean": float(fields[11]),
                }
            )
        except ValueError as exc:
            raise ParseError(f"{path}: malformed row {ln!r}") from exc
    return rows


# ---------------------------------------------------------------------------
# recurrence export: one row per pair plus a log10_tp summary row

def write_recurrence_csv(
    path: str | os.PathLike,
    n_particles: int,
    periods: np.ndarray,
    estimate: RecurrenceEstimate,
    meta: dict | None = None,
) -> None:
    i_idx, j_idx = np.triu_indices(n_particles, k=1)
    buf = _io.StringIO()
    for ln in _meta_lines("recurrence v1", meta):
        buf.write(ln + "\n")
    buf.write("i,j,T_i,n_i,d_i\n")
    for i, j, period, (num, den) in zip(i_idx, j_idx, periods, estimate.rationals):
        buf.write(f"{i},{j},{_fmt(period)},{num},{den}\n")
    buf.write(f"log10_tp,{_fmt(estimate.log10_tp)},,,\n")
    atomic_write_text(path, buf.getvalue())


def read_recurrence_csv(path: str | os.PathLike) -> tuple[list[dict], float]:
    lines = _data_lines(path)
    if not lines or lines[0] != "i,j,T_i,n_i,d_i":
        raise ParseError(f"{path}: bad or missing recurrence header")
    if len(lines) < 2 or not lines[-1].startswith("log10_tp,"):
        raise ParseError(f"{path}: missing log10_tp summary row")
    rows = []
    for ln in lines[1:-1]:
        fields = ln.split(",")
        if len(fields) != 5:
            raise ParseError(f"{path}: malformed row {ln!r}")
        try:
            rows.append(
                {
                    "i": int(fields[0]),
                    "j": int(fields[1]),
                    "T_i": float(fields[2]),
                    "n_i": int(fields[3]),
                    "d_i": int(fields[4]),
                }
            )
        except ValueError as exc:
            raise ParseError(f"{path}: malformed row {ln!r}") from exc
    try:
        log10_tp = float(lines[-1].split(",")[1])
    except (IndexError, ValueError) as exc:
        raise ParseError(f"{path}: malformed summary row") from exc
    return rows, log10_tp
