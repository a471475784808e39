"""Annotation HTTP service: task assignment, clip delivery, judgment log.

A study lives in one directory:

    study/
      videos/<video_id>.avf
      rating_tasks.jsonl   {"task_id", "video_id", "prompt"}
      pair_tasks.jsonl     {"task_id", "pair_id", "video_a", "video_b", "prompt"}
      log.jsonl            append-only rating/pair judgment records

The log is the only mutable file and is strictly append-only; the
in-memory completion index is rebuilt from it on startup, so a crashed
server loses at most its unsubmitted assignments. Every submission is
stored in canonical A/B orientation: the per-assignment displayed_swap
is undone before writing and recorded alongside the choice.
"""

from __future__ import annotations

import base64
import json
import os
import re
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from functools import partial
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Mapping, Sequence
from urllib.parse import parse_qs, urlparse

from .errors import VqbenchError, jsonl_records
from .pairstudy import CHOICES, PairJudgment, PairSpec, write_judgments_jsonl
from .store import IoFailure, VideoTensor, quantize_frames, read_avf, write_avf
from .subjective import DIMENSIONS, RawRating, write_ratings_csv
from .rng import Xorshift64Star, derive_seed

PAIR_VOTES_TO_CLOSE = 3

_ORDER_SALT = 0x0A55160
_SWAP_SALT = 0x51AB


class NoTasksRemaining(VqbenchError):
    """No open task of the requested mode for this annotator."""


class NotFound(VqbenchError):
    """Unknown video or resource."""


class InvalidScore(VqbenchError):
    """A rating score is not an integer in 1..5 or a dimension is missing."""


class InvalidChoice(VqbenchError):
    """A pair choice is not 'A'/'B' or a dimension is missing."""


class TaskNotAssigned(VqbenchError):
    """Submission does not match an open assignment for this annotator."""


@dataclass(frozen=True)
class RatingTask:
    task_id: str
    video_id: str
    prompt: str


@dataclass(frozen=True)
class PairTask:
    task_id: str
    pair_id: str
    video_a: str
    video_b: str
    prompt: str


@dataclass
class Assignment:
    task: RatingTask | PairTask
    displayed_swap: bool


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def build_study(
    study_dir: str,
    videos: Mapping[str, VideoTensor],
    rating_tasks: Sequence[tuple[str, str]],
    pair_tasks: Sequence[tuple[PairSpec, str]],
) -> None:
    """Lay out a fresh study directory.

    ``rating_tasks`` holds (video_id, prompt) pairs; ``pair_tasks`` holds
    (PairSpec, prompt) pairs. Referenced videos must be present.
    """
    for video_id, _ in rating_tasks:
        if video_id not in videos:
            raise VqbenchError(f"rating task references unknown video {video_id!r}")
    for spec, _ in pair_tasks:
        for vid in (spec.video_a, spec.video_b):
            if vid not in videos:
                raise VqbenchError(f"pair {spec.pair_id} references unknown video {vid!r}")
    os.makedirs(os.path.join(study_dir, "videos"), exist_ok=True)
    for video_id, video in videos.items():
        write_avf(os.path.join(study_dir, "videos", f"{video_id}.avf"), video)
    with open(os.path.join(study_dir, "rating_tasks.jsonl"), "w", encoding="utf-8") as fh:
        for video_id, prompt in rating_tasks:
            fh.write(json.dumps(
                {"task_id": f"r-{video_id}", "video_id": video_id, "prompt": prompt},
                separators=(",", ":")) + "\n")
    with open(os.path.join(study_dir, "pair_tasks.jsonl"), "w", encoding="utf-8") as fh:
        for spec, prompt in pair_tasks:
            fh.write(json.dumps(
                {"task_id": f"q-{spec.pair_id}", "pair_id": spec.pair_id,
                 "video_a": spec.video_a, "video_b": spec.video_b, "prompt": prompt},
                separators=(",", ":")) + "\n")
    log = os.path.join(study_dir, "log.jsonl")
    if not os.path.exists(log):
        open(log, "w").close()


def _read_jsonl(path: str) -> list[dict]:
    return list(jsonl_records(path))


class StudyService:
    """All study state and operations; the HTTP layer is a thin shim.

    Task assignment, submission, and log appends share one lock, so a
    task is never concurrently assigned twice and the log file sees
    whole-record appends only.
    """

    def __init__(self, study_dir: str, seed: int, clock: Callable[[], str] = _utc_now):
        self.study_dir = study_dir
        self.clock = clock
        self._lock = threading.Lock()

        try:
            rating_rows = _read_jsonl(os.path.join(study_dir, "rating_tasks.jsonl"))
            pair_rows = _read_jsonl(os.path.join(study_dir, "pair_tasks.jsonl"))
        except OSError as exc:
            raise IoFailure(f"not a study directory: {study_dir}: {exc}") from exc
        self.rating_tasks = [RatingTask(r["task_id"], r["video_id"], r["prompt"]) for r in rating_rows]
        self.pair_tasks = [PairTask(r["task_id"], r["pair_id"], r["video_a"], r["video_b"], r["prompt"])
                           for r in pair_rows]
        self._rating_by_video = {t.video_id: t for t in self.rating_tasks}
        self._pair_by_id = {t.pair_id: t for t in self.pair_tasks}

        # shuffled offering order realizes the alternating-presentation design
        self._rating_order = list(range(len(self.rating_tasks)))
        Xorshift64Star(derive_seed(seed, _ORDER_SALT, 0)).shuffle(self._rating_order)
        self._pair_order = list(range(len(self.pair_tasks)))
        Xorshift64Star(derive_seed(seed, _ORDER_SALT, 1)).shuffle(self._pair_order)
        self._swap_rng = Xorshift64Star(derive_seed(seed, _SWAP_SALT))

        # (annotator, task_id) sets rebuilt from the log
        self.rating_done: set[tuple[str, str]] = set()
        self.pair_done: dict[str, set[str]] = {t.task_id: set() for t in self.pair_tasks}
        self.counts: dict[str, dict[str, int]] = {}
        self._assignments: dict[tuple[str, str], Assignment] = {}

        self._log_path = os.path.join(study_dir, "log.jsonl")
        if os.path.exists(self._log_path):
            for rec in _read_jsonl(self._log_path):
                self._index_record(rec)

    # -- state index ----------------------------------------------------

    def _index_record(self, rec: dict) -> None:
        kind = rec.get("type")
        if kind == "rating":
            annotator = rec["subject_id"]
            task = self._rating_by_video.get(rec["video_id"])
            if task is not None:
                self.rating_done.add((annotator, task.task_id))
            self._bump(annotator, "ratings")
        elif kind == "pair":
            annotator = rec["annotator_id"]
            task = self._pair_by_id.get(rec["pair_id"])
            if task is not None:
                self.pair_done[task.task_id].add(annotator)
            self._bump(annotator, "pair_judgments")
        else:
            raise VqbenchError(f"unknown log record type {kind!r}")

    def _bump(self, annotator: str, key: str) -> None:
        entry = self.counts.setdefault(annotator, {"ratings": 0, "pair_judgments": 0})
        entry[key] += 1

    def _append(self, records: list[dict]) -> None:
        with open(self._log_path, "a", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
        for rec in records:
            self._index_record(rec)

    # -- operations -----------------------------------------------------

    def next_task(self, annotator_id: str, mode: str) -> dict:
        if mode not in ("rating", "pair"):
            raise VqbenchError(f"mode must be 'rating' or 'pair', got {mode!r}")
        with self._lock:
            held = self._assignments.get((annotator_id, mode))
            if held is not None:
                return self._task_payload(held)
            busy = {a.task.task_id for a in self._assignments.values()}
            if mode == "rating":
                for i in self._rating_order:
                    task = self.rating_tasks[i]
                    if task.task_id in busy or (annotator_id, task.task_id) in self.rating_done:
                        continue
                    assignment = Assignment(task, False)
                    self._assignments[(annotator_id, mode)] = assignment
                    return self._task_payload(assignment)
            else:
                for i in self._pair_order:
                    task = self.pair_tasks[i]
                    done_by = self.pair_done[task.task_id]
                    if (task.task_id in busy or annotator_id in done_by
                            or len(done_by) >= PAIR_VOTES_TO_CLOSE):
                        continue
                    assignment = Assignment(task, self._swap_rng.bernoulli(0.5))
                    self._assignments[(annotator_id, mode)] = assignment
                    return self._task_payload(assignment)
            raise NoTasksRemaining(f"no open {mode} tasks for annotator {annotator_id!r}")

    def _task_payload(self, assignment: Assignment) -> dict:
        task = assignment.task
        if isinstance(task, RatingTask):
            return {"mode": "rating", "task_id": task.task_id,
                    "video_id": task.video_id, "prompt": task.prompt}
        return {"mode": "pair", "task_id": task.task_id, "pair_id": task.pair_id,
                "video_a": task.video_a, "video_b": task.video_b,
                "prompt": task.prompt, "displayed_swap": assignment.displayed_swap}

    def submit_rating(self, annotator_id: str, video_id: str, scores: Mapping[str, int]) -> dict:
        if set(scores) != set(DIMENSIONS):
            raise InvalidScore(f"scores must cover exactly {list(DIMENSIONS)}, got {sorted(scores)}")
        for dim in DIMENSIONS:
            value = scores[dim]
            if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 5:
                raise InvalidScore(f"score for {dim} must be an integer in 1..5, got {value!r}")
        with self._lock:
            held = self._assignments.get((annotator_id, "rating"))
            if held is None or held.task.video_id != video_id:
                raise TaskNotAssigned(
                    f"annotator {annotator_id!r} has no open rating task for video {video_id!r}")
            now = self.clock()
            self._append([
                {"type": "rating", "subject_id": annotator_id, "video_id": video_id,
                 "dimension": dim, "score": int(scores[dim]), "timestamp": now}
                for dim in DIMENSIONS
            ])
            del self._assignments[(annotator_id, "rating")]
            return {"ok": True, "records": len(DIMENSIONS)}

    def submit_pair(self, annotator_id: str, pair_id: str, choices: Mapping[str, str]) -> dict:
        if set(choices) != set(DIMENSIONS):
            raise InvalidChoice(f"choices must cover exactly {list(DIMENSIONS)}, got {sorted(choices)}")
        for dim in DIMENSIONS:
            if choices[dim] not in CHOICES:
                raise InvalidChoice(f"choice for {dim} must be one of {CHOICES}, got {choices[dim]!r}")
        with self._lock:
            held = self._assignments.get((annotator_id, "pair"))
            if held is None or held.task.pair_id != pair_id:
                raise TaskNotAssigned(
                    f"annotator {annotator_id!r} has no open pair task for pair {pair_id!r}")
            swap = held.displayed_swap
            now = self.clock()
            self._append([
                {"type": "pair", "pair_id": pair_id, "annotator_id": annotator_id,
                 "dimension": dim,
                 "choice": _unswap(choices[dim], swap),
                 "displayed_swap": swap, "timestamp": now}
                for dim in DIMENSIONS
            ])
            del self._assignments[(annotator_id, "pair")]
            return {"ok": True, "records": len(DIMENSIONS)}

    def get_video(self, video_id: str) -> dict:
        path = os.path.join(self.study_dir, "videos", f"{video_id}.avf")
        if not os.path.exists(path):
            raise NotFound(f"no video {video_id!r} in this study")
        video = read_avf(path)
        t, h, w, _ = video.frames.shape
        raw = quantize_frames(video.frames)
        return {
            "t": t, "h": h, "w": w, "fps": video.fps,
            "frames": [base64.b64encode(raw[i].tobytes()).decode() for i in range(t)],
        }

    def progress(self) -> dict:
        with self._lock:
            ratings = sum(c["ratings"] for c in self.counts.values())
            judgments = sum(c["pair_judgments"] for c in self.counts.values())
            return {
                "ratings": ratings,
                "pair_judgments": judgments,
                "rating_tasks": len(self.rating_tasks),
                "pair_tasks": len(self.pair_tasks),
                "pair_tasks_closed": sum(
                    1 for done in self.pair_done.values() if len(done) >= PAIR_VOTES_TO_CLOSE),
                "annotators": {a: dict(c) for a, c in sorted(self.counts.items())},
            }

    # -- exports ---------------------------------------------------------

    def export_ratings_csv(self, path: str) -> int:
        """Write all logged ratings in the subjective module's CSV format."""
        records = [r for r in _read_jsonl(self._log_path) if r["type"] == "rating"]
        ratings = [RawRating(r["subject_id"], r["video_id"], r["dimension"], int(r["score"]))
                   for r in records]
        write_ratings_csv(ratings, path)
        return len(ratings)

    def export_judgments_jsonl(self, path: str) -> int:
        """Write all logged pair judgments in the pairstudy JSONL format."""
        records = [r for r in _read_jsonl(self._log_path) if r["type"] == "pair"]
        judgments = [
            PairJudgment(r["pair_id"], r["annotator_id"], r["dimension"], r["choice"],
                         bool(r["displayed_swap"]), r["timestamp"])
            for r in records
        ]
        write_judgments_jsonl(judgments, path)
        return len(judgments)


def _unswap(choice: str, displayed_swap: bool) -> str:
    """Displayed choice back to canonical orientation."""
    if not displayed_swap:
        return choice
    return "B" if choice == "A" else "A"


# ---------------------------------------------------------------------------
# HTTP layer

_VIDEO_PATH = re.compile(r"^/api/video/([^/]+)$")

_ERROR_STATUS = (
    (NoTasksRemaining, 404),
    (NotFound, 404),
    (InvalidScore, 400),
    (InvalidChoice, 400),
    (TaskNotAssigned, 409),
)


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def __init__(self, *args, service: StudyService, static_dir: str | None = None, **kwargs):
        self.service = service
        self.static_dir = static_dir
        super().__init__(*args, **kwargs)

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _fail(self, exc: Exception) -> None:
        for klass, status in _ERROR_STATUS:
            if isinstance(exc, klass):
                self._send_json(status, {"error": type(exc).__name__, "message": str(exc)})
                return
        if isinstance(exc, VqbenchError):
            self._send_json(400, {"error": type(exc).__name__, "message": str(exc)})
            return
        self._send_json(500, {"error": "InternalError", "message": str(exc)})

    def do_GET(self):
        url = urlparse(self.path)
        try:
            if url.path == "/api/next-task":
                query = parse_qs(url.query)
                annotator = query.get("annotator", [""])[0]
                mode = query.get("mode", [""])[0]
                if not annotator:
                    raise VqbenchError("annotator query parameter is required")
                self._send_json(200, self.service.next_task(annotator, mode))
                return
            match = _VIDEO_PATH.match(url.path)
            if match:
                self._send_json(200, self.service.get_video(match.group(1)))
                return
            if url.path == "/api/progress":
                self._send_json(200, self.service.progress())
                return
            if self._serve_static(url.path):
                return
            self._send_json(404, {"error": "NotFound", "message": f"no route {url.path}"})
        except Exception as exc:  # noqa: BLE001 - mapped to HTTP statuses
            self._fail(exc)

    def do_POST(self):
        url = urlparse(self.path)
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length) or b"{}")
            if url.path == "/api/rating":
                self._send_json(200, self.service.submit_rating(
                    body.get("annotator_id", ""), body.get("video_id", ""), body.get("scores", {})))
            elif url.path == "/api/pair":
                self._send_json(200, self.service.submit_pair(
                    body.get("annotator_id", ""), body.get("pair_id", ""), body.get("choices", {})))
            else:
                self._send_json(404, {"error": "NotFound", "message": f"no route {url.path}"})
        except json.JSONDecodeError as exc:
            self._send_json(400, {"error": "BadRequest", "message": f"invalid JSON body: {exc}"})
        except Exception as exc:  # noqa: BLE001
            self._fail(exc)

    _MIME = {".html": "text/html", ".js": "text/javascript", ".css": "text/css",
             ".map": "application/json", ".json": "application/json"}

    def _serve_static(self, path: str) -> bool:
        if self.static_dir is None:
            return False
        rel = "index.html" if path == "/" else path.lstrip("/")
        full = os.path.realpath(os.path.join(self.static_dir, rel))
        if not full.startswith(os.path.realpath(self.static_dir) + os.sep):
            return False
        if not os.path.isfile(full):
            return False
        with open(full, "rb") as fh:
            body = fh.read()
        ext = os.path.splitext(full)[1]
        self.send_response(200)
        self.send_header("Content-Type", self._MIME.get(ext, "application/octet-stream"))
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)
        return True


def make_http_server(service: StudyService, port: int = 0, static_dir: str | None = None) -> ThreadingHTTPServer:
    """Bound but not yet serving; port 0 picks a free port (server_port tells which)."""
    handler = partial(_Handler, service=service, static_dir=static_dir)
    return ThreadingHTTPServer(("127.0.0.1", port), handler)


def run_server(study_dir: str, port: int = 8080, seed: int = 0) -> None:
    service = StudyService(study_dir, seed)
    static_dir = os.path.join(study_dir, "static")
    server = make_http_server(service, port, static_dir if os.path.isdir(static_dir) else None)
    print(f"serving study {study_dir} on http://127.0.0.1:{server.server_port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
