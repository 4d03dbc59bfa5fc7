"""On-disk formats: JSON networks, CSV images and ranges, JSON reports.

Images are CSV files whose first row is ``h,w,nc`` followed by ``h*w*nc``
values in the canonical flattening order (channel fastest, then column, then
row).  Every write goes to a temporary file that is renamed into place.
"""

import csv
import io
import json
import os
import tempfile
from importlib import resources

import numpy as np

from .errors import ParseError, ShapeError
from .layers import LAYER_TYPES
from .network import Network

_LAYER_FIELDS = {
    "conv2d": {"weights": True, "bias": True, "padding": False, "stride": False, "dilation": False},
    "avgpool": {"pool_size": True, "padding": False, "stride": False},
    "maxpool": {"pool_size": True, "padding": False, "stride": False},
    "fc": {"weights": True, "bias": True},
    "batchnorm": {"mean": True, "var": True, "epsilon": False, "scale": False, "offset": False},
    "relu": {},
}


def atomic_write(path, text):
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def schema(name):
    """A shipped JSON schema: ``"network"`` or ``"report"``."""
    text = resources.files("imagestar").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


# ---------------------------------------------------------------------------
# networks
# ---------------------------------------------------------------------------

def _numeric(value, where):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: expected a numeric (nested) array") from None
    if not np.all(np.isfinite(arr)):
        raise ParseError(f"{where}: values must be finite")
    return arr


def _layer_from_dict(entry, index):
    where = f"layers[{index}]"
    if not isinstance(entry, dict) or "type" not in entry:
        raise ParseError(f"{where}: expected an object with a 'type' field")
    kind = entry["type"]
    if kind not in LAYER_TYPES:
        raise ParseError(f"{where}.type: unknown layer type {kind!r}")
    fields = _LAYER_FIELDS[kind]
    extra = set(entry) - set(fields) - {"type"}
    if extra:
        raise ParseError(f"{where}: unexpected field(s) {sorted(extra)} for {kind}")
    kwargs = {}
    for name, required in fields.items():
        if name not in entry:
            if required:
                raise ParseError(f"{where}.{name}: missing for {kind} layer")
            continue
        val = _numeric(entry[name], f"{where}.{name}")
        if name in ("padding", "stride", "dilation", "pool_size"):
            if np.any(val != np.round(val)):
                raise ParseError(f"{where}.{name}: must be integers")
            val = tuple(int(v) for v in np.ravel(val))
        elif name == "epsilon":
            val = float(val)
        kwargs[name] = val
    try:
        return LAYER_TYPES[kind](**kwargs)
    except (ShapeError, ValueError) as exc:
        raise ParseError(f"{where}: {exc}") from None


def network_from_dict(doc):
    if not isinstance(doc, dict):
        raise ParseError("network file must hold a JSON object")
    for key in ("input_shape", "layers"):
        if key not in doc:
            raise ParseError(f"{key}: missing")
    shape = doc["input_shape"]
    if not (isinstance(shape, list) and len(shape) == 3 and all(isinstance(v, int) for v in shape)):
        raise ParseError("input_shape: expected [h, w, nc] integers")
    if not isinstance(doc["layers"], list):
        raise ParseError("layers: expected a list")
    layers = [_layer_from_dict(entry, i) for i, entry in enumerate(doc["layers"])]
    return Network(layers, shape, doc.get("labels"))


def network_to_dict(net):
    return {
        "input_shape": list(net.input_shape),
        "labels": list(net.labels),
        "layers": [layer.to_dict() for layer in net.layers],
    }


def load_network(path):
    """Parse a network file; raises :class:`ParseError` or :class:`ShapeError`."""
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return network_from_dict(doc)


def dumps_network(net):
    # float repr is the shortest string that round-trips exactly
    return json.dumps(network_to_dict(net), indent=1) + "\n"


def save_network(net, path):
    atomic_write(path, dumps_network(net))


# ---------------------------------------------------------------------------
# images
# ---------------------------------------------------------------------------

def parse_image(text, source="<image>"):
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{source}: empty file")
    try:
        header = [int(c) for c in rows[0] if c.strip()]
    except ValueError:
        raise ParseError(f"{source}: line 1: header must be three integers h,w,nc") from None
    if len(header) != 3 or min(header) < 1:
        raise ParseError(f"{source}: line 1: header must be three positive integers h,w,nc")
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        for cell in row:
            if not cell.strip():
                continue
            try:
                values.append(float(cell))
            except ValueError:
                raise ParseError(f"{source}: line {lineno}: {cell!r} is not a number") from None
    h, w, nc = header
    if len(values) != h * w * nc:
        raise ParseError(f"{source}: header announces {h * w * nc} values, found {len(values)}")
    arr = np.array(values)
    if not np.all(np.isfinite(arr)):
        raise ParseError(f"{source}: values must be finite")
    return arr.reshape(h, w, nc)


def load_image(path):
    with open(path) as fh:
        return parse_image(fh.read(), str(path))


def dumps_image(image):
    image = np.asarray(image, dtype=float)
    if image.ndim == 2:
        image = image[:, :, None]
    h, w, nc = image.shape
    lines = [f"{h},{w},{nc}"]
    lines += [",".join(repr(float(v)) for v in px) for px in image.reshape(h * w, nc)]
    return "\n".join(lines) + "\n"


def save_image(image, path):
    atomic_write(path, dumps_image(image))


# ---------------------------------------------------------------------------
# ranges & reports
# ---------------------------------------------------------------------------

def dumps_ranges(labels, lo, hi):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["label", "lo", "hi"])
    for name, a, b in zip(labels, lo, hi):
        writer.writerow([name, repr(float(a)), repr(float(b))])
    return buf.getvalue()


def save_ranges(labels, lo, hi, path):
    atomic_write(path, dumps_ranges(labels, lo, hi))


def load_ranges(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return [(r["label"], float(r["lo"]), float(r["hi"])) for r in rows]


def save_report(report, path):
    atomic_write(path, json.dumps(report, indent=2, sort_keys=True) + "\n")


def load_report(path):
    with open(path) as fh:
        return json.load(fh)
