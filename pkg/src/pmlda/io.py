"""File formats: binary PGM, raw float32 planes, corpus/state/token/grid CSVs,
sampler chains and the provenance manifest.

Every writer is deterministic. Floats are printed with 17 significant
digits and nothing time-dependent is recorded, so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .exceptions import FileFormatError
from .model import Corpus, Document, DocumentState


def fmt(v) -> str:
    return format(float(v), ".17g")


def _open_text(path, mode="r"):
    try:
        return open(path, mode, newline="", encoding="utf-8")
    except OSError as exc:
        raise FileFormatError(f"cannot open {path}: {exc.strerror}") from exc


# ---------------------------------------------------------------------------
# PGM


def _pgm_tokens(buf: bytes, count: int):
    """Read ``count`` whitespace-separated header fields, skipping comments."""
    fields, i = [], 2
    while len(fields) < count:
        if i >= len(buf):
            raise FileFormatError("truncated PGM header")
        c = buf[i : i + 1]
        if c == b"#":
            j = buf.find(b"\n", i)
            i = len(buf) if j < 0 else j + 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(buf) and not buf[j : j + 1].isspace():
                j += 1
            fields.append(buf[i:j])
            i = j
    return fields, i + 1  # a single whitespace byte precedes the raster


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) PGM as an integer array of shape ``(H, W)``."""
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise FileFormatError(f"cannot read {path}: {exc.strerror}") from exc
    if buf[:2] != b"P5":
        raise FileFormatError(f"{path} is not a binary PGM (P5)")
    try:
        (w, h, maxval), start = _pgm_tokens(buf, 3)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise FileFormatError(f"{path}: malformed PGM header") from exc
    if w < 1 or h < 1 or not 0 < maxval < 65536:
        raise FileFormatError(f"{path}: invalid PGM dimensions or maxval")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = w * h * dtype.itemsize
    raster = buf[start : start + need]
    if len(raster) != need:
        raise FileFormatError(f"{path}: PGM raster is truncated")
    return np.frombuffer(raster, dtype=dtype).reshape(h, w).astype(np.int64)


def write_pgm(path, pixels, maxval: int | None = None) -> None:
    """Write integer pixels as P5; 16-bit big-endian when ``maxval > 255``."""
    arr = np.asarray(pixels)
    if arr.ndim != 2:
        raise FileFormatError("PGM pixels must be 2-D")
    if maxval is None:
        maxval = 255 if arr.max(initial=0) <= 255 else 65535
    if arr.min(initial=0) < 0 or arr.max(initial=0) > maxval:
        raise FileFormatError("pixel values outside [0, maxval]")
    dtype = ">u2" if maxval > 255 else "u1"
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n{maxval}\n".encode("ascii")
    try:
        Path(path).write_bytes(header + arr.astype(dtype).tobytes())
    except OSError as exc:
        raise FileFormatError(f"cannot write {path}: {exc.strerror}") from exc


def write_membership_maps(out_dir, maps, prefix: str = "topic") -> list:
    """Write each ``(H, W)`` map as a 16-bit PGM and a CSV mirror.

    PGM values are ``round(membership * 65535)``. Returns the written paths.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, m in enumerate(np.asarray(maps, dtype=float)):
        pgm = out_dir / f"{prefix}{k}.pgm"
        write_pgm(pgm, np.round(np.clip(m, 0, 1) * 65535).astype(np.int64), 65535)
        csv_path = out_dir / f"{prefix}{k}.csv"
        with _open_text(csv_path, "w") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerows([[fmt(v) for v in row] for row in m])
        paths += [pgm, csv_path]
    return paths


# ---------------------------------------------------------------------------
# raw float planes


def read_raw_planes(sidecar) -> dict:
    """Read float32 little-endian planes described by a JSON sidecar.

    The sidecar holds ``{"width", "height", "channels": [labels]}``; channel
    ``c`` is stored next to it as ``<stem>.<c>.raw``, or in the file named by
    an optional ``"files"`` mapping.
    """
    sidecar = Path(sidecar)
    try:
        meta = json.loads(sidecar.read_text())
        w, h, channels = int(meta["width"]), int(meta["height"]), list(meta["channels"])
    except OSError as exc:
        raise FileFormatError(f"cannot read {sidecar}: {exc.strerror}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise FileFormatError(f"{sidecar}: sidecar needs width, height and channels") from exc
    files = meta.get("files", {})
    out = {}
    for c in channels:
        path = sidecar.parent / files.get(c, f"{sidecar.stem}.{c}.raw")
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise FileFormatError(f"cannot read {path}: {exc.strerror}") from exc
        if len(raw) != 4 * w * h:
            raise FileFormatError(f"{path}: expected {4 * w * h} bytes, found {len(raw)}")
        out[c] = np.frombuffer(raw, dtype="<f4").reshape(h, w).astype(float)
    return out


def write_raw_planes(sidecar, planes: dict) -> None:
    sidecar = Path(sidecar)
    shapes = {np.shape(p) for p in planes.values()}
    if len(shapes) != 1:
        raise FileFormatError("planes differ in shape")
    h, w = shapes.pop()
    for c, p in planes.items():
        (sidecar.parent / f"{sidecar.stem}.{c}.raw").write_bytes(np.asarray(p, dtype="<f4").tobytes())
    sidecar.write_text(json.dumps({"width": w, "height": h, "channels": list(planes)}, indent=2) + "\n")


# ---------------------------------------------------------------------------
# CSV tables


def write_corpus_csv(path, corpus: Corpus) -> None:
    """One row per word: ``doc_id,f0,...,f{p-1}`` (plus ``pixel`` if known)."""
    with_prov = all(d.provenance is not None for d in corpus)
    with _open_text(path, "w") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["doc_id"] + [f"f{j}" for j in range(corpus.p)] + (["pixel"] if with_prov else []))
        for d in corpus:
            for n, x in enumerate(d.words):
                wr.writerow([d.id] + [fmt(v) for v in x] + ([str(d.provenance[n])] if with_prov else []))


def read_corpus_csv(path) -> Corpus:
    with _open_text(path) as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["doc_id"]:
        raise FileFormatError(f"{path}: corpus CSV must start with a doc_id header")
    header = rows[0]
    has_pixel = header[-1] == "pixel"
    p = len(header) - 1 - has_pixel
    if p < 1:
        raise FileFormatError(f"{path}: no feature columns")
    groups: dict = {}
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FileFormatError(f"{path}:{i}: expected {len(header)} fields")
        try:
            feats = [float(v) for v in row[1 : 1 + p]]
            pix = int(row[-1]) if has_pixel else None
        except ValueError as exc:
            raise FileFormatError(f"{path}:{i}: non-numeric value") from exc
        g = groups.setdefault(row[0], ([], []))
        g[0].append(feats)
        g[1].append(pix)
    if not groups:
        raise FileFormatError(f"{path}: corpus is empty")
    docs = [Document(k, np.array(w), np.array(px) if has_pixel else None) for k, (w, px) in groups.items()]
    return Corpus(tuple(docs))


def write_states(out_dir, corpus: Corpus, states, prefix: str = "") -> list:
    """Write ``{prefix}doc_states.csv`` and ``{prefix}memberships.csv``."""
    out_dir = Path(out_dir)
    states = list(states)
    K = states[0].K
    doc_path = out_dir / f"{prefix}doc_states.csv"
    mem_path = out_dir / f"{prefix}memberships.csv"
    with _open_text(doc_path, "w") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["doc_id", "s"] + [f"pi{k}" for k in range(K)])
        for d, st in zip(corpus, states):
            wr.writerow([d.id, fmt(st.s)] + [fmt(v) for v in st.pi])
    with _open_text(mem_path, "w") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["doc_id", "n"] + [f"z{k}" for k in range(K)])
        for d, st in zip(corpus, states):
            for n, z in enumerate(st.memberships):
                wr.writerow([d.id, n] + [fmt(v) for v in z])
    return [doc_path, mem_path]


def read_states(out_dir, corpus: Corpus, prefix: str = "") -> list:
    out_dir = Path(out_dir)
    with _open_text(out_dir / f"{prefix}doc_states.csv") as fh:
        rows = list(csv.reader(fh))[1:]
    with _open_text(out_dir / f"{prefix}memberships.csv") as fh:
        mrows = list(csv.reader(fh))[1:]
    mem: dict = {}
    for r in mrows:
        mem.setdefault(r[0], []).append([float(v) for v in r[2:]])
    by_id = {r[0]: r for r in rows}
    out = []
    for d in corpus:
        if d.id not in by_id:
            raise FileFormatError(f"no state for document {d.id!r}")
        r = by_id[d.id]
        out.append(DocumentState(np.array(r[2:], dtype=float), float(r[1]), np.array(mem.get(d.id, []))))
    return out


def write_topics(path, topics) -> None:
    with _open_text(path, "w") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["topic"] + [f"mu{j}" for j in range(topics.p)] + ["variance"])
        for k, mu in enumerate(topics.means):
            wr.writerow([k] + [fmt(v) for v in mu] + [fmt(topics.variance)])


def write_token_csv(path, doc_ids, token_docs) -> None:
    with _open_text(path, "w") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["doc_id", "token_id"])
        for did, toks in zip(doc_ids, token_docs):
            wr.writerows([did, int(t)] for t in toks)


def read_token_csv(path):
    """Return ``(doc_ids, token arrays)`` in first-appearance order."""
    with _open_text(path) as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["doc_id", "token_id"]:
        raise FileFormatError(f"{path}: token CSV needs a doc_id,token_id header")
    groups: dict = {}
    for i, r in enumerate(rows[1:], start=2):
        try:
            groups.setdefault(r[0], []).append(int(r[1]))
        except (ValueError, IndexError) as exc:
            raise FileFormatError(f"{path}:{i}: bad token row") from exc
    return list(groups), [np.array(v, dtype=np.int64) for v in groups.values()]


def write_grid_csv(path, spec, grid) -> None:
    """Long-format grid: ``m,s,x,z1,loglik``."""
    xs, zs = spec.x_values, spec.z_values
    with _open_text(path, "w") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["m", "s", "x", "z1", "loglik"])
        for i, m in enumerate(spec.m_values):
            for j, s in enumerate(spec.s_values):
                for a, x in enumerate(xs):
                    for b, z in enumerate(zs):
                        wr.writerow([fmt(m), fmt(s), fmt(x), fmt(z), fmt(grid[i, j, a, b])])


def write_chain(out_dir, chain) -> list:
    """Write the per-iteration trace (log posterior, variance, means)."""
    path = Path(out_dir) / "chain.csv"
    K, p = chain.means.shape[1:]
    with _open_text(path, "w") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["iteration", "log_posterior", "variance"] + [f"mu{k}_{j}" for k in range(K) for j in range(p)])
        for i, it in enumerate(chain.iterations):
            wr.writerow([int(it), fmt(chain.log_posterior[i]), fmt(chain.variances[i])] + [fmt(v) for v in chain.means[i].ravel()])
    acc = Path(out_dir) / "acceptance.csv"
    with _open_text(acc, "w") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["move", "accepted", "proposed"])
        for mv in sorted(chain.proposed):
            wr.writerow([mv, chain.accepted[mv], chain.proposed[mv]])
    return [path, acc]


# ---------------------------------------------------------------------------
# manifest


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()


def write_manifest(out_dir, command: str, config: dict, artifacts) -> Path:
    """Record the resolved config, its hash and every artifact checksum."""
    out_dir = Path(out_dir)
    entries = {}
    for a in sorted({Path(a) for a in artifacts}):
        entries[os.path.relpath(a, out_dir)] = sha256_file(a)
    doc = {"command": command, "config_sha256": config_hash(config), "config": config, "artifacts": entries}
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
