"""CSV snapshots, key=value experiment configs and static SVG plots."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .errors import ConfigError
from .lattice import Q, macroscopic


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_field(path: Path, f: np.ndarray) -> None:
    _, nx, ny = f.shape
    rows = ((i, x, y, f[i, x, y]) for i in range(Q) for x in range(nx) for y in range(ny))
    write_csv(path, ["i", "x", "y", "f"], rows)


def read_field(path: Path) -> np.ndarray:
    header, rows = read_csv(path)
    if header != ["i", "x", "y", "f"]:
        raise ConfigError(f"{path}: expected header i,x,y,f, got {','.join(header)}")
    arr = np.array([[float(v) for v in r] for r in rows])
    nx, ny = int(arr[:, 1].max()) + 1, int(arr[:, 2].max()) + 1
    f = np.zeros((Q, nx, ny))
    f[arr[:, 0].astype(int), arr[:, 1].astype(int), arr[:, 2].astype(int)] = arr[:, 3]
    return f


def write_macro(path: Path, f: np.ndarray) -> None:
    m = macroscopic(f)
    _, nx, ny = f.shape
    rows = ((x, y, m.rho[x, y], m.u[0, x, y], m.u[1, x, y]) for x in range(nx) for y in range(ny))
    write_csv(path, ["x", "y", "rho", "ux", "uy"], rows)


# ---- key=value configs -------------------------------------------------------


def floats(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v.strip()]


def ints(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v.strip()]


def boolean(s: str) -> bool:
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


Schema = dict[str, tuple[Callable[[str], Any], Any]]


def parse_config(text: str, schema: Schema) -> dict[str, Any]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment.

    Unknown keys, duplicates and unparsable values raise :class:`ConfigError`
    carrying the 1-based line number.
    """
    out = {k: default for k, (_, default) in schema.items()}
    seen: set[str] = set()
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {line!r}", lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in schema:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        seen.add(key)
        conv = schema[key][0]
        try:
            out[key] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
    return out


def load_config(path: str | Path | None, schema: Schema) -> dict[str, Any]:
    if path is None:
        return parse_config("", schema)
    return parse_config(Path(path).read_text(), schema)


# ---- plots -------------------------------------------------------------------


def line_plot_svg(
    path: Path,
    series: dict[str, tuple[list[float], list[float]]],
    xlabel: str,
    ylabel: str,
    title: str = "",
    logy: bool = False,
) -> None:
    """Static SVG with the plotted data embedded as an XML comment."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "carleman-workbench"
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, (xs, ys) in series.items():
        ax.plot(xs, ys, marker="o", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if logy:
        ax.set_yscale("log")
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    svg = buf.getvalue()
    data = "\n".join(
        f"{label}: " + " ".join(f"({fmt(x)},{fmt(y)})" for x, y in zip(xs, ys))
        for label, (xs, ys) in series.items()
    )
    comment = "<!-- data\n" + data.replace("--", "- -") + "\n-->\n"
    head, sep, rest = svg.partition("?>\n")
    Path(path).write_text(head + sep + comment + rest if sep else comment + svg)
