"""Versioned checkpoint archives.

A checkpoint is a zip file holding manifest.json plus one raw little-endian
float32 buffer per parameter. Entries carry a fixed timestamp so that
identical training runs produce byte-identical files.
"""

import io
import json
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from ..errors import DataLoadError
from .factory import ArchConfig, init_models

FORMAT_TAG = "irdetect-ckpt-v1"
_EPOCH = (1980, 1, 1, 0, 0, 0)  # zip format's earliest representable time


@dataclass
class Checkpoint:
    arch: ArchConfig
    step: int
    seed: int
    inpainter: object = None  # InpainterNet or None
    detector: object = None   # PatchScorer or None


def _write_entry(zf, name, data: bytes):
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    zf.writestr(info, data)


def _model_entries(prefix, module):
    entries, params = [], {}
    for name, p in module.state_dict().items():
        arr = p.detach().cpu().numpy().astype("<f4")
        file = f"params/{prefix}/{name}.f32"
        entries.append({"name": name, "shape": list(arr.shape), "file": file})
        params[file] = arr.tobytes()
    return entries, params


def save_checkpoint(path, arch: ArchConfig, *, inpainter=None, detector=None,
                    step=0, seed=0):
    """Write the given networks (either or both) plus enough metadata to
    rebuild them: architecture, training step, and the run seed."""
    if inpainter is None and detector is None:
        raise ValueError("nothing to save: both networks are None")
    manifest = {
        "format": FORMAT_TAG,
        "arch": {
            "input_size": list(arch.input_size),
            "inpainter_widths": list(arch.inpainter_widths),
            "detector_spec": [[list(ch), k, s] for ch, k, s in arch.detector_spec],
        },
        "step": int(step),
        "rng_state": {"seed": int(seed)},
        "models": {},
    }
    blobs = {}
    for key, module in (("inpainter", inpainter), ("detector", detector)):
        if module is not None:
            entries, params = _model_entries(key, module)
            manifest["models"][key] = entries
            blobs.update(params)
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        _write_entry(zf, "manifest.json", json.dumps(manifest, indent=1, sort_keys=True).encode())
        for file in sorted(blobs):
            _write_entry(zf, file, blobs[file])
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise DataLoadError(f"missing checkpoint {path}")
    try:
        with zipfile.ZipFile(path) as zf:
            manifest = json.loads(zf.read("manifest.json"))
            if manifest.get("format") != FORMAT_TAG:
                raise DataLoadError(
                    f"{path}: format {manifest.get('format')!r}, expected {FORMAT_TAG!r}")
            raw = manifest["arch"]
            arch = ArchConfig(
                input_size=tuple(raw["input_size"]),
                inpainter_widths=tuple(raw["inpainter_widths"]),
                detector_spec=tuple((tuple(ch), k, s) for ch, k, s in raw["detector_spec"]),
            )
            inpainter, detector = init_models(arch, manifest["rng_state"]["seed"])
            out = Checkpoint(arch, manifest["step"], manifest["rng_state"]["seed"])
            for key, module in (("inpainter", inpainter), ("detector", detector)):
                if key not in manifest["models"]:
                    continue
                state = {}
                for entry in manifest["models"][key]:
                    data = np.frombuffer(zf.read(entry["file"]), dtype="<f4")
                    state[entry["name"]] = torch.from_numpy(
                        data.reshape(entry["shape"]).copy())
                module.load_state_dict(state)
                setattr(out, key, module)
    except (KeyError, json.JSONDecodeError, zipfile.BadZipFile) as exc:
        raise DataLoadError(f"{path}: malformed checkpoint ({exc})") from exc
    return out
