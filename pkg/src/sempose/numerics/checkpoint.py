"""Parameter checkpoints: a JSON manifest plus one little-endian f32 blob per tensor."""

import json
from pathlib import Path

import numpy as np

from ..errors import DataIOError
from .mlp import ParamSet

FORMAT_VERSION = 1


def _blob_name(layer, which):
    return layer.replace("/", "_") + f".{which}.f32"


def save_params(params, out_dir, meta=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    layers = []
    for name, (w, b) in params.items():
        wfile = _blob_name(name, "w")
        bfile = _blob_name(name, "b")
        w.value.astype("<f4").tofile(out / wfile)
        b.value.astype("<f4").tofile(out / bfile)
        layers.append(
            {
                "name": name,
                "w_shape": list(w.value.shape),
                "b_shape": list(b.value.shape),
                "w_file": wfile,
                "b_file": bfile,
            }
        )
    manifest = {"format_version": FORMAT_VERSION, "layers": layers, "meta": meta or {}}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return out / "manifest.json"


def _read_blob(path, shape):
    expected = int(np.prod(shape)) * 4
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise DataIOError(f"cannot read blob {path}: {e}") from e
    if len(raw) != expected:
        raise DataIOError(f"blob {path}: expected {expected} bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype="<f4").reshape(shape)


def load_params(checkpoint_dir, dtype=np.float32):
    cp = Path(checkpoint_dir)
    manifest_path = cp / "manifest.json"
    if not manifest_path.exists():
        raise DataIOError(f"no manifest.json under {cp}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as e:
        raise DataIOError(f"corrupt manifest {manifest_path}: {e}") from e
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise DataIOError(
            f"checkpoint format version {version} unsupported (expected {FORMAT_VERSION})"
        )
    params = ParamSet(dtype=dtype)
    for layer in manifest["layers"]:
        w = _read_blob(cp / layer["w_file"], layer["w_shape"])
        b = _read_blob(cp / layer["b_file"], layer["b_shape"])
        params.add(layer["name"], w, b)
    return params, manifest.get("meta", {})
