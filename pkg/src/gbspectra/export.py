"""Flat-file writers and readers: dense and banded matrices, symbols, samples, eigenvalues."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .toeplitz import SymbolCoeffs, TwoLevelSymbol, symbol_grid


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _emit(text: str, path) -> str:
    if path is not None:
        Path(path).write_text(text)
    return text


def matrix_to_csv(X: np.ndarray, path=None) -> str:
    """Dense row-major CSV preceded by a ``# size=<m>`` line."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError("expected a square matrix")
    lines = [f"# size={X.shape[0]}"]
    lines += [",".join(_fmt(v) for v in row) for row in X]
    return _emit("\n".join(lines) + "\n", path)


def read_matrix_csv(source) -> np.ndarray:
    text = Path(source).read_text() if isinstance(source, Path) else str(source)
    lines = text.strip().splitlines()
    if not lines or not lines[0].startswith("# size="):
        raise ValueError("missing '# size=<m>' header")
    m = int(lines[0].split("=", 1)[1])
    X = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]) if m else np.zeros((0, 0))
    if X.shape != (m, m):
        raise ValueError(f"header says size {m}, body has shape {X.shape}")
    return X


def bandwidth(X: np.ndarray) -> int:
    rows, cols = np.nonzero(X)
    return int(np.abs(rows - cols).max()) if rows.size else 0


def matrix_to_banded(X: np.ndarray, path=None) -> str:
    """Compact text: ``size <m> bandwidth <b>`` then one ``<offset>: values`` line per diagonal.

    Offset ``k`` lists ``X[i, i + k]`` for increasing ``i``.
    """
    X = np.asarray(X, dtype=float)
    m, b = X.shape[0], bandwidth(X)
    lines = [f"size {m} bandwidth {b}"]
    for k in range(-b, b + 1):
        lines.append(f"{k}: " + " ".join(_fmt(v) for v in np.diagonal(X, k)))
    return _emit("\n".join(lines) + "\n", path)


def read_banded(source) -> np.ndarray:
    text = Path(source).read_text() if isinstance(source, Path) else str(source)
    lines = text.strip().splitlines()
    head = lines[0].split()
    if len(head) != 4 or head[0] != "size" or head[2] != "bandwidth":
        raise ValueError(f"bad banded header: {lines[0]!r}")
    m, b = int(head[1]), int(head[3])
    X = np.zeros((m, m))
    for ln in lines[1:]:
        off, _, body = ln.partition(":")
        k = int(off)
        if abs(k) > b:
            raise ValueError(f"diagonal {k} outside declared bandwidth {b}")
        vals = np.array([float(v) for v in body.split()])
        idx = np.arange(len(vals))
        X[idx + max(-k, 0), idx + max(k, 0)] = vals
    return X


def symbol_to_csv(s: SymbolCoeffs, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "c_k"])
    for k, c in s.to_rows():
        w.writerow([k, _fmt(c)])
    return _emit(buf.getvalue(), path)


def samples_to_csv(s, N, path=None, grid: str = "open") -> str:
    """Symbol values on a uniform grid (see :func:`symbol_grid`), in grid order (not sorted)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(s, TwoLevelSymbol):
        N1, N2 = N
        w.writerow(["theta1", "theta2", "value"])
        t1, t2 = symbol_grid(N1, grid), symbol_grid(N2, grid)
        vals = s(t1[None, :], t2[:, None])
        for j, b in enumerate(t2):
            for i, a in enumerate(t1):
                w.writerow([_fmt(a), _fmt(b), _fmt(vals[j, i])])
    else:
        w.writerow(["theta", "value"])
        t = symbol_grid(int(N), grid)
        for a, v in zip(t, s(t)):
            w.writerow([_fmt(a), _fmt(v)])
    return _emit(buf.getvalue(), path)


def eigs_to_csv(values, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    vals = np.asarray(values)
    if np.iscomplexobj(vals):
        w.writerow(["j", "real", "imag"])
        for j, v in enumerate(vals, 1):
            w.writerow([j, _fmt(v.real), _fmt(v.imag)])
    else:
        w.writerow(["j", "value"])
        for j, v in enumerate(vals, 1):
            w.writerow([j, _fmt(v)])
    return _emit(buf.getvalue(), path)
