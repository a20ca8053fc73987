"""Semi-automatic annotation backend.

An annotator fixes the count of the first frame, then taps +1/-1 while
the video plays; the per-frame labels are the prefix sums of those
events. Sessions are event-sourced text logs, so undo is a pop and the
export is always reproducible from the log.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from pydantic import BaseModel

from .dataset_io import FRAME_FILE_RE, LabelRow, LabelTable


class InitialBody(BaseModel):
    count: int


class EventBody(BaseModel):
    frame: int
    delta: int


class ModeBody(BaseModel):
    mode: str


class SessionError(ValueError):
    """Invariant violation in an annotation session."""


@dataclass
class AnnotationSession:
    video_id: str
    initial: Optional[int] = None
    events: list = field(default_factory=list)  # (frame, delta) in log order
    mode: str = "all_people"

    def set_initial(self, count: int) -> None:
        if count < 0:
            raise SessionError("initial count must be non-negative")
        self.initial = count

    def materialize(self, n_frames: int) -> list:
        """Per-frame counts: initial plus all deltas at frames <= k."""
        if self.initial is None:
            raise SessionError("initial count not set")
        deltas = [0] * n_frames
        for frame, delta in self.events:
            if frame < n_frames:
                deltas[frame] += delta
        counts = []
        running = self.initial
        for k in range(n_frames):
            running += deltas[k]
            counts.append(running)
        return counts

    def adjust(self, frame: int, delta: int) -> int:
        """Append a +/-1 event; rejected if any prefix sum would go negative.

        Returns the materialized count at the adjusted frame.
        """
        if self.initial is None:
            raise SessionError("set the initial count first")
        if delta not in (-1, 1):
            raise SessionError("delta must be +1 or -1")
        if frame < 0:
            raise SessionError("frame must be non-negative")
        self.events.append((frame, delta))
        horizon = max(f for f, _ in self.events) + 1
        counts = self.materialize(horizon)
        if min(counts) < 0:
            self.events.pop()
            raise SessionError(f"count would go negative at frame {counts.index(min(counts))}")
        return counts[frame]

    def undo(self) -> None:
        if not self.events:
            raise SessionError("no events to undo")
        self.events.pop()

    def export(self, n_frames: int, fps: int = 20,
               base: Optional[LabelTable] = None) -> LabelTable:
        """One labeled row per frame; the mode selects the written column.

        In customers_only mode an existing table's people counts are
        preserved; without one, people_count mirrors the customer count.
        """
        counts = self.materialize(n_frames)
        base_rows = {r.frame_id: r for r in base.rows} if base else {}
        rows = []
        for k in range(n_frames):
            ts = int(round(k * 1000.0 / fps))
            if self.mode == "customers_only":
                people = base_rows[k].people_count if k in base_rows else counts[k]
                if counts[k] > people:
                    raise SessionError(
                        f"customer count {counts[k]} exceeds people count {people} at frame {k}"
                    )
                rows.append(LabelRow(k, ts, people, counts[k]))
            else:
                prev = base_rows.get(k)
                rows.append(LabelRow(k, ts, counts[k],
                                     prev.customer_count if prev else None))
        return LabelTable(rows)

    # -- persistence ---------------------------------------------------

    def to_log(self) -> str:
        lines = [f"video {self.video_id}", f"mode {self.mode}"]
        if self.initial is not None:
            lines.append(f"initial {self.initial}")
        for frame, delta in self.events:
            lines.append(f"event {frame} {delta:+d}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_log(cls, text: str) -> "AnnotationSession":
        session = cls(video_id="")
        for line in text.splitlines():
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "video":
                session.video_id = parts[1]
            elif parts[0] == "mode":
                session.mode = parts[1]
            elif parts[0] == "initial":
                session.initial = int(parts[1])
            elif parts[0] == "event":
                session.events.append((int(parts[1]), int(parts[2])))
            else:
                raise SessionError(f"bad session log line: {line!r}")
        return session


class AnnotationStore:
    """Videos on disk plus their per-video annotation sessions.

    Layout: root/<video>/frame_<idx>.rgbp; session logs live under
    root/_sessions/<video>.log and exports under root/<video>/labels.csv.
    """

    def __init__(self, root, fps: int = 20):
        self.root = Path(root)
        self.fps = fps
        self.session_dir = self.root / "_sessions"
        self.session_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict = {}

    def list_videos(self) -> list:
        videos = []
        for p in sorted(self.root.iterdir()):
            if not p.is_dir() or p.name.startswith("_"):
                continue
            frames = self._frame_files(p.name)
            if frames:
                videos.append({"id": p.name, "frames": len(frames)})
        return videos

    def _frame_files(self, video_id: str) -> list:
        vdir = self.root / video_id
        if not vdir.is_dir():
            return []
        files = {}
        for f in vdir.iterdir():
            m = FRAME_FILE_RE.match(f.name)
            if m:
                files[int(m.group(1))] = f
        return [files[i] for i in sorted(files)]

    def frame_bytes(self, video_id: str, n: int) -> bytes:
        files = self._frame_files(video_id)
        if not files:
            raise KeyError(video_id)
        if not 0 <= n < len(files):
            raise IndexError(n)
        return files[n].read_bytes()

    def frame_count(self, video_id: str) -> int:
        files = self._frame_files(video_id)
        if not files:
            raise KeyError(video_id)
        return len(files)

    def session(self, video_id: str) -> AnnotationSession:
        if video_id not in self._sessions:
            if not self._frame_files(video_id):
                raise KeyError(video_id)
            log = self.session_dir / f"{video_id}.log"
            if log.exists():
                self._sessions[video_id] = AnnotationSession.from_log(log.read_text())
            else:
                self._sessions[video_id] = AnnotationSession(video_id=video_id)
        return self._sessions[video_id]

    def persist(self, video_id: str) -> None:
        session = self._sessions[video_id]
        (self.session_dir / f"{video_id}.log").write_text(session.to_log())

    def export(self, video_id: str) -> Path:
        session = self.session(video_id)
        n = self.frame_count(video_id)
        out = self.root / video_id / "labels.csv"
        base = LabelTable.load(out) if out.exists() else None
        table = session.export(n, fps=self.fps, base=base)
        table.save(out)
        return out


def create_app(store: AnnotationStore):
    """FastAPI app exposing the annotation workflow over HTTP."""
    from fastapi import FastAPI, HTTPException, Response

    app = FastAPI(title="annotation-service")

    def get_session(video_id: str) -> AnnotationSession:
        try:
            return store.session(video_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown video {video_id}")

    @app.get("/videos")
    def videos():
        return {"videos": store.list_videos()}

    @app.get("/videos/{video_id}/frames/{n}")
    def frame(video_id: str, n: int):
        try:
            data = store.frame_bytes(video_id, n)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown video {video_id}")
        except IndexError:
            raise HTTPException(status_code=404, detail=f"no frame {n}")
        return Response(content=data, media_type="application/octet-stream")

    @app.get("/videos/{video_id}/session")
    def session_state(video_id: str):
        s = get_session(video_id)
        n = store.frame_count(video_id)
        counts = s.materialize(n) if s.initial is not None else None
        return {
            "video_id": video_id,
            "initial": s.initial,
            "mode": s.mode,
            "events": [{"frame": f, "delta": d} for f, d in s.events],
            "frame_count": n,
            "counts": counts,
        }

    @app.put("/videos/{video_id}/session/initial")
    def set_initial(video_id: str, body: InitialBody):
        s = get_session(video_id)
        try:
            s.set_initial(body.count)
        except SessionError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        store.persist(video_id)
        return {"initial": s.initial}

    @app.put("/videos/{video_id}/session/mode")
    def set_mode(video_id: str, body: ModeBody):
        s = get_session(video_id)
        if body.mode not in ("all_people", "customers_only"):
            raise HTTPException(status_code=422, detail=f"unknown mode {body.mode}")
        s.mode = body.mode
        store.persist(video_id)
        return {"mode": s.mode}

    @app.post("/videos/{video_id}/session/events")
    def add_event(video_id: str, body: EventBody):
        s = get_session(video_id)
        try:
            count = s.adjust(body.frame, body.delta)
        except SessionError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        store.persist(video_id)
        return {"count_at_frame": count}

    @app.delete("/videos/{video_id}/session/events/last")
    def undo_event(video_id: str):
        s = get_session(video_id)
        try:
            s.undo()
        except SessionError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        store.persist(video_id)
        return {"events": len(s.events)}

    @app.post("/videos/{video_id}/export")
    def export(video_id: str):
        s = get_session(video_id)
        try:
            path = store.export(video_id)
        except SessionError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"path": str(path)}

    return app
