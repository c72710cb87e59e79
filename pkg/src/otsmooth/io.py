"""File formats: model and trace JSON, point CSV, dataset CSV, SVG overlays."""

import json
import math
from pathlib import Path

import numpy as np

from otsmooth._validation import check_points
from otsmooth.datasets import MixtureSpec
from otsmooth.exceptions import InvalidInputError
from otsmooth.potential import PotentialModel


def _num(x):
    """Shortest repr that round-trips a double (at most 17 significant digits)."""
    x = float(x)
    if not math.isfinite(x):
        raise InvalidInputError("cannot serialise a non-finite number")
    return repr(x)


def _num17(x):
    if not math.isfinite(float(x)):
        raise InvalidInputError("cannot serialise a non-finite number")
    return f"{float(x):.16e}"


def model_to_json(model):
    # hand-assembled so the field order and number format are fixed
    codes = ",".join("[" + ",".join(_num17(v) for v in row) + "]" for row in model.codes)
    heights = ",".join(_num17(v) for v in model.heights)
    eps = "null" if model.epsilon is None else _num17(model.epsilon)
    return (f'{{"n":{model.n},"d":{model.d},"codes":[{codes}],'
            f'"heights":[{heights}],"epsilon":{eps}}}\n')


def model_from_json(text):
    try:
        data = json.loads(text)
        codes = np.asarray(data["codes"], dtype=float)
        heights = np.asarray(data["heights"], dtype=float)
        eps = data.get("epsilon")
        n, d = int(data["n"]), int(data["d"])
    except (ValueError, KeyError, TypeError) as exc:
        raise InvalidInputError(f"malformed model file: {exc}") from exc
    if codes.ndim != 2 or codes.shape != (n, d):
        raise InvalidInputError(f"model declares n={n}, d={d} but codes have shape {codes.shape}")
    return PotentialModel(codes, heights, eps)


def save_model(model, path):
    Path(path).write_text(model_to_json(model))


def load_model(path):
    return model_from_json(Path(path).read_text())


def write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def points_to_csv(X, header=False):
    X = np.asarray(X, dtype=float)
    lines = []
    if header:
        lines.append(",".join(f"x{k + 1}" for k in range(X.shape[1])))
    lines.extend(",".join(_num(v) for v in row) for row in X)
    return "".join(line + "\n" for line in lines)


def save_points(X, path, header=False):
    Path(path).write_text(points_to_csv(X, header))


def _parse_rows(lines, path):
    rows = []
    for num, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        if num == 1 and fields[0].strip().startswith("x"):
            continue  # optional header row
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise InvalidInputError(f"{path}:{num}: {exc}") from exc
    if rows and len({len(r) for r in rows}) != 1:
        raise InvalidInputError(f"{path}: rows have differing lengths")
    return rows


def load_points(path, d=None):
    """Read a point CSV; ``#`` comment lines and an ``x1,...`` header are skipped."""
    lines = Path(path).read_text().splitlines()
    rows = _parse_rows(lines, path)
    if not rows:
        return np.empty((0, d or 0))
    X, _ = check_points(np.asarray(rows), d=d, name=str(path))
    return X


def save_dataset(X, spec, path, kind=None):
    meta = json.dumps(spec.to_dict(), separators=(",", ":"))
    head = f"# mixture_spec {meta}\n"
    if kind is not None:
        head = f"# dataset {kind}\n" + head
    Path(path).write_text(head + points_to_csv(X))


def load_dataset(path, with_kind=False):
    """Points plus the MixtureSpec from the ``#`` header (None if absent).

    With ``with_kind=True`` the dataset kind (``"ring"``, ``"grid"`` or
    None) is returned as a third value.
    """
    spec = kind = None
    for line in Path(path).read_text().splitlines():
        if not line.startswith("#"):
            break
        if line.startswith("# mixture_spec "):
            try:
                spec = MixtureSpec.from_dict(json.loads(line[len("# mixture_spec "):]))
            except (ValueError, KeyError, TypeError) as exc:
                raise InvalidInputError(f"{path}: malformed mixture spec: {exc}") from exc
        elif line.startswith("# dataset "):
            kind = line[len("# dataset "):].strip()
    X = load_points(path)
    return (X, spec, kind) if with_kind else (X, spec)


SVG_PIXELS = 480
SVG_EXTENT = 1.1
SVG_RADIUS = {"observed": 0.011, "generated": 0.008}
SVG_COLORS = {"observed": "#1f4e9c", "generated": "#d1495b"}


def _svg_circles(X, color, radius):
    # the view box is in data units; y is negated so that up is positive
    return [f'<circle cx="{x:.5f}" cy="{-y:.5f}" r="{radius}" fill="{color}"/>'
            for x, y in np.asarray(X, dtype=float).reshape(-1, 2)]


def scatter_svg(observed, generated, title=""):
    """Two-layer scatter on the fixed square [-1.1, 1.1]^2, observed drawn first.

    The text depends only on the inputs, so identical inputs give identical
    bytes.
    """
    e = SVG_EXTENT
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_PIXELS}" height="{SVG_PIXELS}" '
        f'viewBox="{-e} {-e} {2 * e:.1f} {2 * e:.1f}">',
        f'<rect x="{-e}" y="{-e}" width="{2 * e:.1f}" height="{2 * e:.1f}" fill="white"/>',
        '<rect x="-1" y="-1" width="2" height="2" fill="none" stroke="#bbbbbb" stroke-width="0.004"/>',
    ]
    if title:
        safe = title.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        lines.append(f"<title>{safe}</title>")
    for layer, X in (("observed", observed), ("generated", generated)):
        lines.append(f'<g id="{layer}">')
        lines += _svg_circles(X, SVG_COLORS[layer], SVG_RADIUS[layer])
        lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
