"""Fixed-format MPS export and import for :class:`LinearModel`.

Layout follows the IBM dialect (NAME, ROWS, COLUMNS, RHS, BOUNDS, ENDATA)
with the usual field columns 2-3, 5-12, 15-22, 25-36, 40-47 and 50-61.
Numbers are written with ``repr`` so the file round-trips bit for bit; a long
number may run past its nominal field, which is why the reader splits on
whitespace. Names never contain spaces. Binary columns appear in BOUNDS as
``BV``. See docs/mps.md.
"""
import numpy as np

from .model import INF, LinearModel

OBJ_ROW = "COST"
RHS_SET = "RHS"
BND_SET = "BND"


def _num(v):
    v = float(v)
    if np.isfinite(v) and abs(v) < 1e15 and v == int(v):
        return f"{int(v)}."
    return repr(v)


def _entry(f1, f2, f3="", f4="", f5="", f6=""):
    line = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5:
        line += f"   {f5:<8}  {f6:>12}"
    return line.rstrip()


def format_mps(model: LinearModel):
    lines = [f"NAME          {model.name}", "ROWS", f" N  {OBJ_ROW}"]
    lines += [f" {s}  {r}" for s, r in zip(model.senses, model.row_names)]
    lines.append("COLUMNS")
    for j, col in enumerate(model.col_names):
        pairs = []
        if model.c[j] != 0:
            pairs.append((OBJ_ROW, model.c[j]))
        pairs += [(model.row_names[i], model.A[i, j]) for i in np.flatnonzero(model.A[:, j])]
        if not pairs:
            pairs.append((OBJ_ROW, 0.0))
        for k in range(0, len(pairs), 2):
            chunk = pairs[k:k + 2]
            (r1, v1), rest = chunk[0], chunk[1:]
            if rest:
                lines.append(_entry("", col, r1, _num(v1), rest[0][0], _num(rest[0][1])))
            else:
                lines.append(_entry("", col, r1, _num(v1)))
    lines.append("RHS")
    nz = [(r, v) for r, v in zip(model.row_names, model.rhs) if v != 0]
    for k in range(0, len(nz), 2):
        chunk = nz[k:k + 2]
        if len(chunk) == 2:
            lines.append(_entry("", RHS_SET, chunk[0][0], _num(chunk[0][1]),
                                chunk[1][0], _num(chunk[1][1])))
        else:
            lines.append(_entry("", RHS_SET, chunk[0][0], _num(chunk[0][1])))
    lines.append("BOUNDS")
    for j, col in enumerate(model.col_names):
        lo, hi = model.lb[j], model.ub[j]
        if model.binary[j]:
            lines.append(_entry("BV", BND_SET, col))
        elif lo == hi:
            lines.append(_entry("FX", BND_SET, col, _num(lo)))
        else:
            if lo == -INF:
                lines.append(_entry("MI", BND_SET, col))
            elif lo != 0:
                lines.append(_entry("LO", BND_SET, col, _num(lo)))
            if hi != INF:
                lines.append(_entry("UP", BND_SET, col, _num(hi)))
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def export_mps(inst, path):
    model = getattr(inst, "model", inst)
    with open(path, "w") as fh:
        fh.write(format_mps(model))


class MpsError(ValueError):
    pass


def parse_mps(text):
    name, section = "", None
    rows, senses, obj = [], [], None
    cols, col_pos, entries = [], {}, []
    rhs, bounds = {}, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0]
            if section == "NAME":
                name = head[1] if len(head) > 1 else ""
            elif section == "ENDATA":
                break
            elif section not in ("ROWS", "COLUMNS", "RHS", "BOUNDS"):
                raise MpsError(f"line {lineno}: unsupported section {section}")
            continue
        f = raw.split()
        if section == "ROWS":
            if f[0] == "N":
                if obj is None:
                    obj = f[1]
            else:
                rows.append(f[1])
                senses.append(f[0])
        elif section == "COLUMNS":
            if len(f) >= 3 and f[1] == "'MARKER'":
                raise MpsError(f"line {lineno}: integer markers are not supported; use BV bounds")
            col = f[0]
            if col not in col_pos:
                col_pos[col] = len(cols)
                cols.append(col)
            for r, v in zip(f[1::2], f[2::2]):
                entries.append((col, r, float(v)))
        elif section == "RHS":
            vals = f[1:] if len(f) % 2 == 1 else f
            for r, v in zip(vals[0::2], vals[1::2]):
                rhs[r] = float(v)
        elif section == "BOUNDS":
            kind, col = f[0], f[2]
            value = float(f[3]) if len(f) > 3 else None
            bounds.append((kind, col, value))

    row_pos = {r: i for i, r in enumerate(rows)}
    n, m = len(cols), len(rows)
    c, A = np.zeros(n), np.zeros((m, n))
    for col, r, v in entries:
        if r == obj:
            c[col_pos[col]] = v
        elif r in row_pos:
            A[row_pos[r], col_pos[col]] = v
        else:
            raise MpsError(f"unknown row {r}")
    lb, ub, binary = np.zeros(n), np.full(n, INF), np.zeros(n, dtype=bool)
    for kind, col, value in bounds:
        j = col_pos[col]
        if kind == "BV":
            binary[j], lb[j], ub[j] = True, 0.0, 1.0
        elif kind == "LO":
            lb[j] = value
        elif kind == "UP":
            ub[j] = value
        elif kind == "FX":
            lb[j] = ub[j] = value
        elif kind == "MI":
            lb[j] = -INF
        elif kind == "PL":
            ub[j] = INF
        else:
            raise MpsError(f"unsupported bound type {kind}")
    return LinearModel(
        name=name,
        col_names=cols,
        row_names=rows,
        c=c,
        A=A,
        senses=senses,
        rhs=np.array([rhs.get(r, 0.0) for r in rows]),
        lb=lb,
        ub=ub,
        binary=binary,
    )


def read_mps(path):
    with open(path) as fh:
        return parse_mps(fh.read())
