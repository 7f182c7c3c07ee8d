"""Feature tables, WAV ingestion and CSV persistence.

Feature files are comma-separated with a fixed metadata prefix::

    id,speaker,session,label,<feature 1>,...,<feature m>

Embeddings produced by the reducers use the same layout with columns
``dim0 ... dim{L-1}``.
"""
from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataFormatError

META_COLUMNS = ("id", "speaker", "session", "label")


@dataclass(frozen=True)
class Utterance:
    id: str
    speaker_id: str
    session_id: str
    label: str


@dataclass
class FeatureTable:
    """An ``n x m`` feature matrix plus one :class:`Utterance` per row."""

    rows: list
    X: np.ndarray
    column_names: list = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim == 1 and self.X.size == 0:
            self.X = self.X.reshape(0, len(self.column_names))
        if self.X.ndim != 2:
            raise DataFormatError("feature matrix must be 2-D")
        if not self.column_names:
            self.column_names = [f"f{j}" for j in range(self.X.shape[1])]
        if self.X.shape[0] != len(self.rows):
            raise DataFormatError(
                f"{self.X.shape[0]} feature rows but {len(self.rows)} utterances")
        if self.X.shape[1] != len(self.column_names):
            raise DataFormatError(
                f"{self.X.shape[1]} feature columns but {len(self.column_names)} names")
        if not np.all(np.isfinite(self.X)):
            raise DataFormatError("feature matrix contains non-finite values")
        ids = [r.id for r in self.rows]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise DataFormatError(f"duplicate utterance id {dup!r}")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def m(self):
        return self.X.shape[1]

    @property
    def ids(self):
        return [r.id for r in self.rows]

    @property
    def labels(self):
        return np.array([r.label for r in self.rows], dtype=object)

    @property
    def speakers(self):
        return [r.speaker_id for r in self.rows]

    @property
    def sessions(self):
        return [r.session_id for r in self.rows]

    def subset(self, idx):
        idx = np.asarray(idx, dtype=int)
        return FeatureTable([self.rows[i] for i in idx], self.X[idx], list(self.column_names))

    def with_features(self, X, column_names=None):
        return FeatureTable(list(self.rows), X, column_names or [])


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise DataFormatError("sample rate must be positive")
        if len(self.samples) == 0:
            raise DataFormatError("audio clip is empty")

    @property
    def duration(self):
        return len(self.samples) / self.sample_rate


def _format_float(x):
    return repr(float(x))


def load_feature_csv(path):
    """Read a feature CSV into a :class:`FeatureTable`.

    Raises :class:`DataFormatError` on a bad header, a non-numeric cell
    (naming the 1-based file row and the column) or a duplicate id.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if tuple(header[:4]) != META_COLUMNS:
            raise DataFormatError(
                f"{path}: header must start with {','.join(META_COLUMNS)}, got {header[:4]}")
        names = header[4:]
        if not names:
            raise DataFormatError(f"{path}: no feature columns")
        if len(set(header)) != len(header):
            dup = next(h for h in header if header.count(h) > 1)
            raise DataFormatError(f"{path}: duplicate header column {dup!r}")
        rows, values, seen = [], [], set()
        for lineno, rec in enumerate(reader, start=2):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if len(rec) != len(header):
                raise DataFormatError(
                    f"{path}: row {lineno} has {len(rec)} cells, expected {len(header)}")
            uid = rec[0]
            if uid in seen:
                raise DataFormatError(f"{path}: duplicate id {uid!r} at row {lineno}")
            seen.add(uid)
            vec = []
            for name, cell in zip(names, rec[4:]):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataFormatError(
                        f"{path}: non-numeric value {cell!r} at row {lineno}, column {name}") from None
                if not math.isfinite(v):
                    raise DataFormatError(
                        f"{path}: non-finite value at row {lineno}, column {name}")
                vec.append(v)
            rows.append(Utterance(uid, rec[1], rec[2], rec[3]))
            values.append(vec)
    X = np.array(values, dtype=float).reshape(len(rows), len(names))
    return FeatureTable(rows, X, names)


def write_table_csv(table, path):
    """Write a feature table or embedding in the layout read by :func:`load_feature_csv`."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(META_COLUMNS) + list(table.column_names))
    for r, x in zip(table.rows, table.X):
        w.writerow([r.id, r.speaker_id, r.session_id, r.label] + [_format_float(v) for v in x])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def fuse_tables(a, b):
    """Column-concatenate two tables whose rows describe the same utterances.

    Rows are matched by id and kept in ``a``'s order; any id present in only
    one table is an error.
    """
    pos = {uid: i for i, uid in enumerate(b.ids)}
    missing = [uid for uid in a.ids if uid not in pos]
    extra = sorted(set(b.ids) - set(a.ids))
    if missing or extra:
        bad = missing[0] if missing else extra[0]
        raise DataFormatError(f"utterance id {bad!r} is not present in both feature tables")
    order = [pos[uid] for uid in a.ids]
    names = list(a.column_names) + list(b.column_names)
    if len(set(names)) != len(names):
        names = [f"a_{c}" for c in a.column_names] + [f"b_{c}" for c in b.column_names]
    return FeatureTable(list(a.rows), np.hstack([a.X, b.X[order]]), names)


# WAVE_FORMAT tags
_PCM = 1
_IEEE_FLOAT = 3
_EXTENSIBLE = 0xFFFE


def load_wav(path):
    """Decode a RIFF/WAVE file to a mono :class:`AudioClip`.

    Accepts 16-bit integer PCM and 32-bit IEEE float (plain or
    ``WAVE_FORMAT_EXTENSIBLE``). Channels are averaged; integer samples are
    divided by 32768.
    """
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise DataFormatError(f"{path}: not a RIFF/WAVE file")
    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        size = struct.unpack("<I", data[pos + 4:pos + 8])[0]
        body = data[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            if len(body) < 16:
                raise DataFormatError(f"{path}: truncated fmt chunk")
            tag, channels, rate, _, block_align, bits = struct.unpack("<HHIIHH", body[:16])
            if tag == _EXTENSIBLE and len(body) >= 26:
                tag = struct.unpack("<H", body[24:26])[0]
            fmt = (tag, channels, rate, block_align, bits)
        elif cid == b"data":
            if len(body) < size:
                raise DataFormatError(f"{path}: truncated data chunk "
                                      f"({len(body)} of {size} bytes)")
            payload = body
        pos += 8 + size + (size & 1)
    if fmt is None:
        raise DataFormatError(f"{path}: missing fmt chunk")
    if payload is None:
        raise DataFormatError(f"{path}: missing data chunk")
    tag, channels, rate, block_align, bits = fmt
    if channels < 1 or rate <= 0:
        raise DataFormatError(f"{path}: invalid channel count or sample rate")
    if tag == _PCM and bits == 16:
        dtype, scale = np.dtype("<i2"), 32768.0
    elif tag == _IEEE_FLOAT and bits == 32:
        dtype, scale = np.dtype("<f4"), 1.0
    else:
        raise DataFormatError(
            f"{path}: unsupported encoding (format tag {tag}, {bits} bits); "
            "only 16-bit PCM and 32-bit float are read")
    frame_bytes = dtype.itemsize * channels
    nframes = len(payload) // frame_bytes
    if nframes == 0:
        raise DataFormatError(f"{path}: zero-length data chunk")
    raw = np.frombuffer(payload[:nframes * frame_bytes], dtype=dtype).astype(float)
    samples = raw.reshape(nframes, channels).mean(axis=1) / scale
    return AudioClip(samples=samples, sample_rate=int(rate))


def write_wav(path, samples, sample_rate, channels=1, float32=False):
    """Write 16-bit PCM (or 32-bit float) WAV; ``samples`` is ``(n,)`` or ``(n, channels)``."""
    a = np.asarray(samples, dtype=float)
    if a.ndim == 1:
        a = np.repeat(a[:, None], channels, axis=1)
    channels = a.shape[1]
    if float32:
        body = a.astype("<f4").tobytes()
        tag, bits = _IEEE_FLOAT, 32
    else:
        body = np.clip(np.round(a * 32768.0), -32768, 32767).astype("<i2").tobytes()
        tag, bits = _PCM, 16
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", tag, channels, sample_rate, sample_rate * block, block, bits)
    out = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    out += b"data" + struct.pack("<I", len(body)) + body + (b"\0" if len(body) & 1 else b"")
    Path(path).write_bytes(b"RIFF" + struct.pack("<I", len(out)) + out)


def load_manifest(path):
    """Read an extraction manifest ``path,id,speaker,session,label``.

    Relative wav paths resolve against the manifest's directory.
    """
    path = Path(path)
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != ["path", "id", "speaker", "session", "label"]:
            raise DataFormatError(f"{path}: manifest header must be path,id,speaker,session,label")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 5:
                raise DataFormatError(f"{path}: row {lineno} must have 5 cells")
            wav = Path(rec[0])
            if not wav.is_absolute():
                wav = path.parent / wav
            entries.append((wav, Utterance(rec[1], rec[2], rec[3], rec[4])))
    return entries
