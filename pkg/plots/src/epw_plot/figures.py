"""CSV parsing and figure construction.

The input files carry a schema comment line `# epw-csv v1 <scenario>`
followed by a header row. Each figure kind accepts a fixed set of
scenarios; anything else is a schema mismatch and must be rejected, since
silently plotting the wrong columns would misrepresent the experiment.
"""

import csv
import os
from dataclasses import dataclass, field

import matplotlib
from matplotlib.figure import Figure

_CSV_VERSION = "epw-csv v1"

# scenarios each figure kind is allowed to display
KIND_SCHEMAS = {
    "mode-sweep": ("mode-sweep",),
    "convergence": ("surrogate", "fundamental-psweep", "geometry"),
    "spectrum": ("spectrum",),
    "distance": ("fundamental-distance",),
}

# stable ids and no embedded dates, so reruns write identical bytes
matplotlib.rcParams["svg.hashsalt"] = "epw-plot"
_SAVE_METADATA = {".svg": {"Date": None}, ".png": None}


class SchemaError(ValueError):
    """Input file does not match the declared CSV contract."""


@dataclass(frozen=True)
class FigureSpec:
    inputs: tuple
    kind: str
    out: str
    yscale: str = "log"

    def __post_init__(self):
        if self.kind not in KIND_SCHEMAS:
            raise SchemaError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")
        if self.yscale not in ("log", "linear"):
            raise SchemaError("yscale must be 'log' or 'linear'")
        ext = os.path.splitext(self.out)[1].lower()
        if ext not in (".png", ".svg"):
            raise SchemaError("output image must end in .png or .svg")


@dataclass(frozen=True)
class Table:
    """One parsed artifact: scenario tag, column names, columns by name."""

    path: str
    scenario: str
    columns: tuple
    data: dict = field(compare=False)

    def __len__(self):
        return len(next(iter(self.data.values())))

    @property
    def label(self):
        return os.path.splitext(os.path.basename(self.path))[0]


def parse_table(path: str) -> Table:
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        prefix = f"# {_CSV_VERSION} "
        if not first.startswith(prefix) or not first[len(prefix) :].strip():
            raise SchemaError(f"{path}: missing or malformed schema line")
        scenario = first[len(prefix) :].strip()
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: no header row") from None
        if not header or any(not name for name in header):
            raise SchemaError(f"{path}: empty column name in header")
        rows = []
        for lineno, row in enumerate(reader, start=3):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = {}
    for j, name in enumerate(header):
        column = [row[j] for row in rows]
        try:
            column = [float(v) for v in column]
        except ValueError:
            pass  # non-numeric columns (series names) stay as strings
        data[name] = column
    return Table(path=path, scenario=scenario, columns=tuple(header), data=data)


def _require_columns(table: Table, names):
    missing = [n for n in names if n not in table.data]
    if missing:
        raise SchemaError(f"{table.path}: missing columns {missing}")


def _series_groups(table: Table, x_name: str, y_name: str):
    """Split rows by the 'series' column when present, else one group."""
    xs, ys = table.data[x_name], table.data[y_name]
    if "series" in table.data:
        groups = {}
        for s, x, y in zip(table.data["series"], xs, ys):
            groups.setdefault(s, ([], []))
            groups[s][0].append(x)
            groups[s][1].append(y)
        return [(f"{table.label}: {name}", x, y) for name, (x, y) in groups.items()]
    return [(table.label, xs, ys)]


def _plot_mode_sweep(fig: Figure, tables, yscale: str):
    ax_res, ax_norm = fig.subplots(1, 2)
    for table in tables:
        _require_columns(table, ("ell", "residual", "coeff_norm"))
        ax_res.plot(table.data["ell"], table.data["residual"], "o-", label=table.label)
        ax_norm.plot(
            table.data["ell"], table.data["coeff_norm"], "s-", label=table.label
        )
    ax_res.set_xlabel("mode degree")
    ax_res.set_ylabel("relative residual")
    ax_norm.set_xlabel("mode degree")
    ax_norm.set_ylabel("coefficient norm")
    for ax in (ax_res, ax_norm):
        ax.set_yscale(yscale)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()


def _plot_convergence(fig: Figure, tables, yscale: str):
    ax = fig.subplots()
    x_name = None
    for table in tables:
        x_name = "ratio" if "ratio" in table.data else "P"
        _require_columns(table, (x_name, "residual"))
        for label, xs, ys in _series_groups(table, x_name, "residual"):
            ax.plot(xs, ys, "o-", label=label)
    ax.set_xlabel("P / N" if x_name == "ratio" else "set size P")
    ax.set_ylabel("relative residual")
    ax.set_yscale(yscale)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()


def _plot_spectrum(fig: Figure, tables, yscale: str):
    ax = fig.subplots()
    for table in tables:
        _require_columns(table, ("P", "index", "sigma"))
        blocks = {}
        for p, i, s in zip(table.data["P"], table.data["index"], table.data["sigma"]):
            blocks.setdefault(int(p), ([], []))
            blocks[int(p)][0].append(i)
            blocks[int(p)][1].append(s)
        for p, (idx, sig) in sorted(blocks.items()):
            ax.plot(idx, sig, label=f"{table.label}: P={p}")
    ax.set_xlabel("singular value index")
    ax.set_ylabel("sigma")
    ax.set_yscale(yscale)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()


def _plot_distance(fig: Figure, tables, yscale: str):
    ax = fig.subplots()
    for table in tables:
        _require_columns(table, ("dist_over_lambda", "residual"))
        for label, xs, ys in _series_groups(table, "dist_over_lambda", "residual"):
            ax.plot(xs, ys, "o-", label=label)
    ax.set_xlabel("source distance / wavelength")
    ax.set_ylabel("relative residual")
    ax.set_yscale(yscale)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()


_BUILDERS = {
    "mode-sweep": _plot_mode_sweep,
    "convergence": _plot_convergence,
    "spectrum": _plot_spectrum,
    "distance": _plot_distance,
}


def build_figure(spec: FigureSpec) -> Figure:
    """Parse all inputs, validate them against the kind, draw the figure."""
    tables = []
    for path in spec.inputs:
        table = parse_table(path)
        allowed = KIND_SCHEMAS[spec.kind]
        if table.scenario not in allowed:
            raise SchemaError(
                f"{path}: scenario {table.scenario!r} does not fit kind "
                f"{spec.kind!r} (expected one of {', '.join(allowed)})"
            )
        tables.append(table)
    width = 10.0 if spec.kind == "mode-sweep" else 6.0
    fig = Figure(figsize=(width, 4.5), dpi=150)
    _BUILDERS[spec.kind](fig, tables, spec.yscale)
    fig.suptitle(", ".join(sorted({t.scenario for t in tables})))
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> str:
    fig = build_figure(spec)
    ext = os.path.splitext(spec.out)[1].lower()
    fig.savefig(spec.out, metadata=_SAVE_METADATA[ext])
    return spec.out
