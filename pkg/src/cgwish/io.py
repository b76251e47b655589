"""Text formats: matrices, CSV data, orderings, run configs and reports."""

from __future__ import annotations

import csv
import io as _io
from pathlib import Path

import numpy as np

from .errors import InvalidParams, ParseError, ValidationError
from .wishart import PriorSpec, alpha_from_delta, alpha_from_offset

__all__ = [
    "SYMMETRY_TOL",
    "parse_matrix",
    "read_matrix",
    "format_matrix",
    "write_matrix",
    "read_csv",
    "write_csv",
    "read_order",
    "parse_config",
    "read_config",
    "prior_from_config",
    "Report",
    "parse_report",
    "report_body",
    "VOLATILE_KEYS",
]

SYMMETRY_TOL = 1e-9
VOLATILE_KEYS = ("wall_time_seconds",)


def _content_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def parse_matrix(text, path=None, symmetric=True):
    """Whitespace-separated rows, one per line; ``#`` starts a comment."""
    rows = []
    for lineno, line in _content_lines(text):
        try:
            row = [float(t) for t in line.split()]
        except ValueError:
            raise ParseError(f"non-numeric entry in {line!r}", path, lineno) from None
        if rows and len(row) != len(rows[0]):
            raise ParseError(f"row has {len(row)} entries, expected {len(rows[0])}",
                             path, lineno)
        rows.append(row)
    if not rows:
        raise ParseError("empty matrix", path, None)
    A = np.array(rows)
    if symmetric:
        if A.shape[0] != A.shape[1]:
            raise ParseError(f"matrix is {A.shape[0]}x{A.shape[1]}, expected square", path)
        if np.max(np.abs(A - A.T), initial=0.0) > SYMMETRY_TOL * max(1.0, np.abs(A).max()):
            raise ParseError("matrix is not symmetric", path)
        A = 0.5 * (A + A.T)
    return A


def read_matrix(path, symmetric=True):
    path = Path(path)
    return parse_matrix(path.read_text(), str(path), symmetric)


def format_matrix(A, fmt="{:.17g}"):
    return "".join(" ".join(fmt.format(x) for x in row) + "\n" for row in np.asarray(A))


def write_matrix(A, path):
    Path(path).write_text(format_matrix(A))


def read_csv(path, header=False):
    """Comma-separated observations, one per row.

    Returns ``(Y, names)`` where ``names`` is ``None`` without a header.
    """
    path = Path(path)
    names = None
    rows = []
    with path.open(newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if header and names is None:
                names = [c.strip() for c in rec]
                continue
            try:
                row = [float(c) for c in rec]
            except ValueError:
                raise ParseError(f"non-numeric field in row {rec!r}", str(path), lineno) from None
            if rows and len(row) != len(rows[0]):
                raise ParseError(f"row has {len(row)} fields, expected {len(rows[0])}",
                                 str(path), lineno)
            rows.append(row)
    if not rows:
        raise ParseError("no observations", str(path), None)
    return np.array(rows), names


def write_csv(Y, path, header=None):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    for row in np.asarray(Y):
        w.writerow([repr(float(x)) for x in row])
    Path(path).write_text(buf.getvalue())


def read_order(path, m):
    """Permutation file: the new label of vertex ``1..m`` in order."""
    path = Path(path)
    vals = []
    for lineno, line in _content_lines(path.read_text()):
        try:
            vals += [int(t) for t in line.split()]
        except ValueError:
            raise ParseError(f"non-integer in {line!r}", str(path), lineno) from None
    if sorted(vals) != list(range(1, m + 1)):
        raise ParseError(f"not a permutation of 1..{m}", str(path))
    return tuple(vals)


def parse_config(text, path=None):
    """``key = value`` lines; ``#`` comments; later keys override earlier."""
    out = {}
    for lineno, line in _content_lines(text):
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", path, lineno)
        k, v = (s.strip() for s in line.split("=", 1))
        if not k:
            raise ParseError("empty key", path, lineno)
        out[k.lower()] = v
    return out


def read_config(path):
    path = Path(path)
    cfg = parse_config(path.read_text(), str(path))
    cfg.setdefault("_dir", str(path.parent))
    return cfg


def _float_list(s):
    try:
        return [float(t) for t in s.replace(",", " ").split()]
    except ValueError:
        raise InvalidParams(f"bad number list {s!r}") from None


def prior_from_config(cfg, g, S=None, idx=None):
    """Build a :class:`PriorSpec` from config keys ``u`` and ``alpha``.

    ``g`` and ``S`` are in the working vertex order.  A matrix file or an
    explicit alpha list is given in the caller's labels and is moved into
    that order with ``idx`` (``idx[new] = old``, 0-based) when supplied.

    ``u``: ``zero``, ``identity``, ``scaled-identity`` (``tr(S)/m · I``, needs
    data), ``scaled-identity:<c>`` or ``file:<path>``.
    ``alpha``: ``list:<v1,...,vm>``, ``offset:<c>`` (``c + |N^<(i)|``),
    ``constant:<c>`` or ``delta:<d>`` (``d + 2m - 2 n_i``).
    """
    m = g.m
    u = cfg.get("u")
    a = cfg.get("alpha")
    if u is None or a is None:
        raise InvalidParams("config needs both 'u' and 'alpha'")
    kind, _, arg = u.partition(":")
    kind = kind.strip().lower()
    if kind == "zero":
        U = np.zeros((m, m))
    elif kind == "identity":
        U = np.eye(m)
    elif kind == "scaled-identity":
        if arg:
            U = float(arg) * np.eye(m)
        elif S is None:
            raise InvalidParams("u = scaled-identity needs data to compute tr(S)/m")
        else:
            U = np.trace(S) / m * np.eye(m)
    elif kind == "file":
        p = Path(arg.strip())
        if not p.is_absolute() and "_dir" in cfg:
            p = Path(cfg["_dir"]) / p
        U = read_matrix(p)
        if idx is not None and U.shape == (m, m):
            U = U[np.ix_(idx, idx)]
    else:
        raise InvalidParams(f"unknown u specification {u!r}")
    if U.shape != (m, m):
        raise ValidationError(f"U is {U.shape}, graph has {m} vertices")

    kind, _, arg = a.partition(":")
    kind = kind.strip().lower()
    if kind == "list":
        alpha = np.array(_float_list(arg))
        if alpha.size != m:
            raise ValidationError(f"alpha list has {alpha.size} entries, expected {m}")
        if idx is not None:
            alpha = alpha[np.asarray(idx)]
    elif kind in ("offset", "constant", "delta"):
        vals = _float_list(arg)
        if len(vals) != 1:
            raise InvalidParams(f"alpha = {kind}: needs one number")
        c = vals[0]
        if kind == "offset":
            alpha = alpha_from_offset(g, c)
        elif kind == "constant":
            alpha = np.full(m, c)
        else:
            alpha = alpha_from_delta(g, c)
    else:
        raise InvalidParams(f"unknown alpha specification {a!r}")
    return PriorSpec(U, alpha)


class Report:
    """Sectioned ``key = value`` text with CSV matrix blocks.

    Layout::

        [section]
        key = value
        [matrix name]
        ,1,2,...
        1,x11,x12,...
    """

    def __init__(self, title):
        self.title = title
        self._parts = []

    def section(self, name, items):
        self._parts.append(("section", name, list(items)))
        return self

    def matrix(self, name, A, labels=None):
        A = np.asarray(A)
        labels = [str(i + 1) for i in range(A.shape[1])] if labels is None else list(labels)
        self._parts.append(("matrix", name, (A, labels)))
        return self

    def text(self):
        out = [f"# {self.title}"]
        for kind, name, payload in self._parts:
            out.append("")
            if kind == "section":
                out.append(f"[{name}]")
                out += [f"{k} = {_fmt(v)}" for k, v in payload]
            else:
                A, labels = payload
                out.append(f"[matrix {name}]")
                out.append("," + ",".join(labels))
                for lab, row in zip(labels, A):
                    out.append(lab + "," + ",".join(_fmt(x) for x in row))
        return "\n".join(out) + "\n"

    def write(self, path):
        Path(path).write_text(self.text())


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    if isinstance(v, (list, tuple)):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def parse_report(text):
    """Inverse of :meth:`Report.text`: ``{section: dict or ndarray}``."""
    out = {}
    cur = None
    rows = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1]
            if name.startswith("matrix "):
                cur, rows = name[7:], []
                out[cur] = rows
            else:
                cur, rows = name, None
                out[cur] = {}
            continue
        if rows is not None:
            if line.startswith(","):
                continue
            rows.append([float(x) for x in line.split(",")[1:]])
        else:
            k, _, v = line.partition("=")
            out[cur][k.strip()] = v.strip()
    return {k: (np.array(v) if isinstance(v, list) else v) for k, v in out.items()}


def report_body(text):
    """Report text without run-dependent lines such as wall time."""
    keep = []
    for line in text.splitlines():
        key = line.split("=", 1)[0].strip()
        if key in VOLATILE_KEYS:
            continue
        keep.append(line)
    return "\n".join(keep) + "\n"
