"""On-disk formats: RGBP binary frames, label tables and sequence manifests.

The RGBP file is a tiny fixed little-endian header followed by raw
interleaved R,G,B,P bytes (P stored as 0/255 so the file previews as a
plain raster). Label tables are CSV; manifests are JSON documents
listing the frame files and label of every training sequence.
"""

from __future__ import annotations

import csv
import io
import json
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .frames import PChannel, RGBPFrame
from .training import PeopleLabel

RGBP_MAGIC = b"RGBP"
RGBP_VERSION = 1
# magic(4) + version(1) + reserved(1) + width u16 + height u16
RGBP_HEADER = struct.Struct("<4sBBHH")

LABEL_HEADER = ["frame_id", "timestamp_ms", "people_count", "customer_count"]


class FormatError(ValueError):
    """Malformed file contents."""


# -- RGBP binary frames ----------------------------------------------

def write_rgbp(frame: RGBPFrame, path) -> None:
    with open(path, "wb") as fh:
        fh.write(rgbp_bytes(frame))


def rgbp_bytes(frame: RGBPFrame) -> bytes:
    h, w = frame.height, frame.width
    payload = np.empty((h, w, 4), dtype=np.uint8)
    payload[..., :3] = frame.rgb
    payload[..., 3] = frame.p.bits * 255
    return RGBP_HEADER.pack(RGBP_MAGIC, RGBP_VERSION, 0, w, h) + payload.tobytes()


def read_rgbp(path, timestamp_ms: int = 0, index: int = 0) -> RGBPFrame:
    with open(path, "rb") as fh:
        data = fh.read()
    return rgbp_from_bytes(data, timestamp_ms=timestamp_ms, index=index)


def rgbp_from_bytes(data: bytes, timestamp_ms: int = 0, index: int = 0) -> RGBPFrame:
    if len(data) < RGBP_HEADER.size:
        raise FormatError("truncated RGBP header")
    magic, version, _, w, h = RGBP_HEADER.unpack_from(data)
    if magic != RGBP_MAGIC:
        raise FormatError("bad RGBP magic")
    if version != RGBP_VERSION:
        raise FormatError(f"unsupported RGBP version {version}")
    expected = RGBP_HEADER.size + h * w * 4
    if len(data) != expected:
        raise FormatError(f"payload length {len(data)} != expected {expected}")
    payload = np.frombuffer(data, dtype=np.uint8, offset=RGBP_HEADER.size).reshape(h, w, 4)
    p_bytes = payload[..., 3]
    if not np.isin(p_bytes, (0, 255)).all():
        raise FormatError("P channel bytes must be 0 or 255")
    return RGBPFrame(
        payload[..., :3].copy(),
        PChannel((p_bytes >= 128).astype(np.uint8)),
        timestamp_ms=timestamp_ms,
        index=index,
    )


# -- label tables ------------------------------------------------------

@dataclass(frozen=True)
class LabelRow:
    frame_id: int
    timestamp_ms: int
    people_count: int
    customer_count: Optional[int] = None


@dataclass
class LabelTable:
    rows: list = field(default_factory=list)

    def __post_init__(self):
        prev = None
        for r in self.rows:
            if prev is not None and r.frame_id <= prev:
                raise FormatError("frame ids must be unique and ascending")
            prev = r.frame_id
            if r.people_count < 0:
                raise FormatError("people_count must be non-negative")
            if r.customer_count is not None:
                if r.customer_count < 0 or r.customer_count > r.people_count:
                    raise FormatError("customer_count must be in [0, people_count]")

    def label_for(self, frame_id: int) -> PeopleLabel:
        for r in self.rows:
            if r.frame_id == frame_id:
                return PeopleLabel(r.people_count, r.customer_count)
        raise KeyError(f"no label for frame {frame_id}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(LABEL_HEADER)
        for r in self.rows:
            cust = "" if r.customer_count is None else r.customer_count
            writer.writerow([r.frame_id, r.timestamp_ms, r.people_count, cust])
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "LabelTable":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty label table")
        if header != LABEL_HEADER:
            raise FormatError(f"bad label table header {header}")
        rows = []
        for rec in reader:
            if not rec:
                continue
            fid, ts, people, cust = rec
            rows.append(LabelRow(
                int(fid), int(ts), int(people),
                None if cust == "" else int(cust),
            ))
        return cls(rows)

    @classmethod
    def load(cls, path) -> "LabelTable":
        return cls.from_csv(Path(path).read_text())


def relabel_customers(table: LabelTable, edits) -> LabelTable:
    """Fill the customer_count column; people_count is never touched.

    edits: iterable of (frame_id, customer_count).
    """
    by_id = {r.frame_id: r for r in table.rows}
    updates = {}
    for frame_id, customers in edits:
        if frame_id not in by_id:
            raise KeyError(f"no frame {frame_id} in label table")
        row = by_id[frame_id]
        if customers < 0 or customers > row.people_count:
            raise FormatError(
                f"customer_count {customers} out of range for people_count {row.people_count}"
            )
        updates[frame_id] = customers
    rows = [
        LabelRow(r.frame_id, r.timestamp_ms, r.people_count,
                 updates.get(r.frame_id, r.customer_count))
        for r in table.rows
    ]
    return LabelTable(rows)


# -- sequence manifests ------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    sequence_id: str
    frame_paths: tuple
    label: PeopleLabel


@dataclass
class SequenceManifest:
    dataset_id: str
    stride: int
    seq_len: int
    sequences: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({
            "dataset_id": self.dataset_id,
            "stride": self.stride,
            "seq_len": self.seq_len,
            "sequences": [
                {
                    "id": e.sequence_id,
                    "frames": list(e.frame_paths),
                    "label": {
                        "people_count": e.label.total_count,
                        "customer_count": e.label.customer_count,
                    },
                }
                for e in self.sequences
            ],
        }, indent=2)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def from_json(cls, text: str) -> "SequenceManifest":
        d = json.loads(text)
        seqs = [
            ManifestEntry(
                e["id"], tuple(e["frames"]),
                PeopleLabel(e["label"]["people_count"], e["label"]["customer_count"]),
            )
            for e in d["sequences"]
        ]
        return cls(d["dataset_id"], d["stride"], d["seq_len"], seqs)

    @classmethod
    def load(cls, path) -> "SequenceManifest":
        return cls.from_json(Path(path).read_text())


FRAME_FILE_RE = re.compile(r"frame_(\d+)\.rgbp$")


def import_dataset(root, stride: int, seq_len: int, dataset_id: Optional[str] = None) -> SequenceManifest:
    """Build a sequence manifest from a directory of per-video RGBP frames.

    Layout: root/<video>/frame_<rawindex>.rgbp plus root/<video>/labels.csv.
    Frame ids must ascend in steps of exactly `stride` (they are raw
    stream indices of the kept frames). Sequences are windows of seq_len
    consecutive kept frames, labeled with the last frame's label, and
    never span two videos.
    """
    root = Path(root)
    if dataset_id is None:
        dataset_id = root.name
    video_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not video_dirs:
        raise FormatError(f"no video directories under {root}")
    sequences = []
    for video in video_dirs:
        labels = LabelTable.load(video / "labels.csv")
        frame_files = {}
        for f in video.iterdir():
            m = FRAME_FILE_RE.match(f.name)
            if m:
                frame_files[int(m.group(1))] = f
        ids = sorted(frame_files)
        if not ids:
            raise FormatError(f"no frame files in {video}")
        for a, b in zip(ids, ids[1:]):
            if b - a != stride:
                raise FormatError(
                    f"{video.name}: frame ids {a}->{b} are not {stride} apart"
                )
        label_ids = {r.frame_id for r in labels.rows}
        missing = [i for i in ids if i not in label_ids]
        if missing:
            raise FormatError(f"{video.name}: frames {missing[:5]} lack labels")
        by_id = {r.frame_id: r for r in labels.rows}
        for end in range(seq_len - 1, len(ids)):
            window = ids[end - seq_len + 1:end + 1]
            last = by_id[window[-1]]
            sequences.append(ManifestEntry(
                f"{video.name}:{window[-1]}",
                tuple(str(frame_files[i]) for i in window),
                PeopleLabel(last.people_count, last.customer_count),
            ))
    return SequenceManifest(dataset_id, stride, seq_len, sequences)


def load_manifest_samples(manifest: SequenceManifest):
    """Materialize manifest sequences into training samples."""
    from .training import LabeledSequence

    samples = []
    for e in manifest.sequences:
        frames = [read_rgbp(p) for p in e.frame_paths]
        x = np.stack([f.to_tensor() for f in frames])
        samples.append(LabeledSequence(x, e.label))
    return samples
