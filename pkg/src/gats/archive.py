"""On-disk archives: sample corpora, anchor sets, primitive sets and run manifests.

Each archive is a directory holding ``manifest.json`` plus one ``.dtz`` file
per array.  Every artifact-writing command also leaves a ``run.json``
describing how it was produced.
"""
import datetime as _dt
import json
import os
from pathlib import Path

import numpy as np

from . import __version__, dtz
from .anchor import Anchor, AnchorSet, frame_hash
from .primitives import MatrixGrassmannPrimitive, TensorGrassmannPrimitive, validate_primitive

ARCHIVE_VERSION = 1
MANIFEST = "manifest.json"
RUN_MANIFEST = "run.json"


class ArchiveError(ValueError):
    pass


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path, kind=None):
    path = Path(path)
    try:
        with open(path / MANIFEST) as fh:
            man = json.load(fh)
    except FileNotFoundError:
        raise ArchiveError(f"{path} has no {MANIFEST}") from None
    if kind is not None and man.get("format") != kind:
        raise ArchiveError(f"{path} is a {man.get('format')!r} archive, expected {kind!r}")
    return man


def _key_out(k):
    return str(k)


def _key_in(k):
    return int(k) if k.isdigit() else k


# -- corpora ----------------------------------------------------------------


def save_corpus(out, samples, conditions=None, ids=None, meta=None):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    ids = ids or [f"{i:05d}" for i in range(len(samples))]
    entries = []
    for i, (sid, X) in enumerate(zip(ids, samples)):
        fname = f"{sid}.dtz"
        dtz.save(out / fname, X)
        entry = {"id": sid, "file": fname, "dims": list(np.shape(X))}
        if conditions is not None and conditions[i] is not None:
            entry["condition"] = conditions[i]
        entries.append(entry)
    _write_json(out / MANIFEST, {"format": "gats-corpus", "version": ARCHIVE_VERSION,
                                 "samples": entries, "meta": meta or {}})


def load_corpus(path):
    """Returns ``(ids, arrays, conditions, manifest)``."""
    path = Path(path)
    man = read_manifest(path, "gats-corpus")
    ids, arrays, conds = [], [], []
    for e in man["samples"]:
        ids.append(e["id"])
        arrays.append(dtz.load(path / e["file"]))
        conds.append(e.get("condition"))
    return ids, arrays, conds, man


# -- anchors ----------------------------------------------------------------


def save_anchors(out, anchors, meta):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    table = {}
    for k, a in anchors.anchors.items():
        fname = f"anchor_{k}.dtz"
        dtz.save(out / fname, a.frame)
        np.savetxt(out / f"scores_{k}.txt", a.overlap_scores, fmt="%.17g")
        n, r = a.frame.shape
        table[_key_out(k)] = {"file": fname, "n": n, "r": r, "medoid_index": a.medoid_index, "hash": a.hash}
    _write_json(out / MANIFEST, {"format": "gats-anchors", "version": ARCHIVE_VERSION,
                                 "anchors": table, **meta})


def load_anchors(path, verify=True):
    """Returns ``(AnchorSet, manifest)``; checks stored hashes when ``verify``."""
    path = Path(path)
    man = read_manifest(path, "gats-anchors")
    anchors = {}
    for k, e in man["anchors"].items():
        V0 = dtz.load(path / e["file"])
        h = frame_hash(V0)
        if verify and h != e["hash"]:
            raise ArchiveError(f"anchor {k} hash mismatch: file {h[:12]} vs manifest {e['hash'][:12]}")
        scores_path = path / f"scores_{k}.txt"
        scores = np.atleast_1d(np.loadtxt(scores_path)) if scores_path.exists() else np.array([])
        anchors[_key_in(k)] = Anchor(V0, int(e["medoid_index"]), scores, h)
    return AnchorSet(anchors), man


# -- primitives -------------------------------------------------------------


def save_primitives(out, prims, ids, meta, conditions=None):
    """``prims[i]`` is a list of per-channel MGPs or a single TGP."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, (sid, P) in enumerate(zip(ids, prims)):
        files = {}
        if isinstance(P, TensorGrassmannPrimitive):
            files["core"] = f"{sid}_core.dtz"
            dtz.save(out / files["core"], P.core)
            for k, U in sorted(P.factors.items()):
                files[f"U{k}"] = f"{sid}_U{k}.dtz"
                dtz.save(out / files[f"U{k}"], U)
        else:
            for c, p in enumerate(P):
                files[f"A_c{c}"] = f"{sid}_A_c{c}.dtz"
                files[f"V_c{c}"] = f"{sid}_V_c{c}.dtz"
                dtz.save(out / files[f"A_c{c}"], p.A)
                dtz.save(out / files[f"V_c{c}"], p.V_tilde)
        entry = {"id": sid, "files": files}
        if conditions is not None and conditions[i] is not None:
            entry["condition"] = conditions[i]
        entries.append(entry)
    _write_json(out / MANIFEST, {"format": "gats-primitives", "version": ARCHIVE_VERSION,
                                 "samples": entries, **meta})


def load_primitives(path, validate=None):
    """Returns ``(ids, prims, conditions, manifest)``.

    Frames are checked for orthonormality unless the archive is marked
    ``generated`` (sampled primitives are only approximately orthonormal).
    """
    path = Path(path)
    man = read_manifest(path, "gats-primitives")
    if validate is None:
        validate = not man.get("generated", False)
    hashes = {_key_in(k): v for k, v in man.get("anchor_hashes", {}).items()}
    ids, prims, conds = [], [], []
    for e in man["samples"]:
        f = e["files"]
        if man["type"] == "TGP":
            factors = {int(k[1:]): dtz.load(path / v) for k, v in f.items() if k.startswith("U")}
            P = TensorGrassmannPrimitive(dtz.load(path / f["core"]), factors, tuple(man["dims"]),
                                         {k: hashes.get(k) for k in factors})
            if validate:
                validate_primitive(P)
        else:
            P = []
            for c in range(man["channels"]):
                p = MatrixGrassmannPrimitive(dtz.load(path / f[f"A_c{c}"]), dtz.load(path / f[f"V_c{c}"]),
                                             hashes.get(f"c{c}"))
                if validate:
                    validate_primitive(p)
                P.append(p)
        ids.append(e["id"])
        prims.append(P)
        conds.append(e.get("condition"))
    return ids, prims, conds, man


# -- run manifests ----------------------------------------------------------


def now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def write_run_manifest(out_dir, command, argv, config, seeds=None, anchor_hashes=None,
                       inputs=(), outputs=(), started=None):
    from .dtz import VERSION as DTZ_VERSION
    from .diffusion import CKPT_VERSION

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / RUN_MANIFEST, {
        "command": command,
        "argv": list(argv),
        "config": config,
        "seeds": seeds or {},
        "anchor_hashes": {str(k): v for k, v in (anchor_hashes or {}).items()},
        "tool_version": __version__,
        "formats": {"dtz": DTZ_VERSION, "archive": ARCHIVE_VERSION, "checkpoint": CKPT_VERSION},
        "started": started or now(),
        "finished": now(),
        "inputs": [os.fspath(p) for p in inputs],
        "outputs": [os.fspath(p) for p in outputs],
    })


def read_run_manifest(path):
    path = Path(path)
    if path.is_dir():
        path = path / RUN_MANIFEST
    with open(path) as fh:
        return json.load(fh)
