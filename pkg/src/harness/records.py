"""Run records, the per-directory run lock and raw-first result storage"""

import json
import logging
import os
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Dict, Any, Optional

from ..ai.agents import AgentResponse, ParseStatus, Query
from ..core.database import DatabaseManager
from ..core.exceptions import ExperimentError, RunLockedError

logger = logging.getLogger(__name__)

LOCK_NAME = ".run.lock"
RECORD_NAME = "run_record.json"
TRANSCRIPT_NAME = "transcripts.jsonl"
DATABASE_NAME = "runs.db"

# Abort when more than this share of issued completions failed
MAX_FAILURE_RATE = 0.10

# Completion rows buffered before a database write
FLUSH_EVERY = 500


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class RunRecord:
    """Config snapshot, failure tally and derived vectors of one run

    Raw completions live in the run database and the transcript file;
    everything in ``derived`` can be recomputed from them.
    """
    kind: str
    agent: str
    config: Dict[str, Any]
    item_ids: List[str] = field(default_factory=list)
    derived: Dict[str, Any] = field(default_factory=dict)
    issued: int = 0
    failed: int = 0
    run_id: Optional[int] = None
    status: str = "running"
    started_at: str = field(default_factory=utc_now_iso)
    finished_at: Optional[str] = None

    @property
    def parsed(self) -> int:
        return self.issued - self.failed

    @property
    def failure_rate(self) -> float:
        return self.failed / self.issued if self.issued else 0.0

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["parsed"] = self.parsed
        return data

    def save(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, ensure_ascii=False)
        return path

    @classmethod
    def load(cls, path: Path) -> "RunRecord":
        path = Path(path)
        if path.is_dir():
            path = path / RECORD_NAME
        if not path.exists():
            raise ExperimentError("Run record not found", str(path))
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        data.pop("parsed", None)
        return cls(**data)


class RunLock:
    """Exclusive lock file in an output directory, one experiment at a time"""

    def __init__(self, out_dir: Path):
        self.path = Path(out_dir) / LOCK_NAME
        self._fd: Optional[int] = None

    def acquire(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            self._fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RunLockedError("Another experiment is running in this directory", str(self.path.parent))
        os.write(self._fd, str(os.getpid()).encode())

    def release(self) -> None:
        if self._fd is not None:
            os.close(self._fd)
            self._fd = None
            self.path.unlink(missing_ok=True)

    def __enter__(self) -> "RunLock":
        self.acquire()
        return self

    def __exit__(self, *exc) -> None:
        self.release()


class RawSink:
    """Stores every completion before aggregation: transcript line plus database row"""

    def __init__(self, out_dir: Path, db: DatabaseManager, run_id: int):
        self.db = db
        self.run_id = run_id
        self.transcript_path = Path(out_dir) / TRANSCRIPT_NAME
        self._file = open(self.transcript_path, "w", encoding="utf-8")
        self._rows: List[Dict[str, Any]] = []
        self.issued = 0
        self.failed = 0

    def add(self, query: Query, responses: List[AgentResponse], sample_index: int = 0) -> None:
        for k, response in enumerate(responses):
            self._file.write(
                json.dumps(
                    {
                        "item_key": query.key,
                        "sample_index": sample_index,
                        "completion_index": k,
                        "shuffle_seed": query.seed,
                        "prompt_hash": response.prompt_hash,
                        "raw_text": response.raw_text,
                        "reprompt_text": response.reprompt_text,
                        "verdict": response.verdict_str(),
                        "status": response.status.value,
                        "error_kind": response.error_kind,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
            self._rows.append(
                {
                    "item_key": query.key,
                    "sample_index": sample_index,
                    "completion_index": k,
                    "shuffle_seed": query.seed,
                    "swapped": int(query.swapped),
                    "prompt_hash": response.prompt_hash,
                    "raw_text": response.raw_text,
                    "verdict": response.verdict_str(),
                    "status": response.status.value,
                    "error_kind": response.error_kind,
                }
            )
            self.issued += 1
            if response.status is ParseStatus.FAILED:
                self.failed += 1
        if len(self._rows) >= FLUSH_EVERY:
            self.flush()

    def flush(self) -> None:
        self._file.flush()
        if self._rows:
            self.db.save_completions(self.run_id, self._rows)
            self._rows = []

    def close(self) -> None:
        self.flush()
        self._file.close()


def check_failure_rate(record: RunRecord, out_dir: Path) -> None:
    """Abort a run whose failed share exceeds the threshold, saving the partial record

    Raises:
        ExperimentError: carrying the partial record path
    """
    if record.failure_rate > MAX_FAILURE_RATE:
        record.status = "aborted"
        record.finished_at = utc_now_iso()
        partial = record.save(Path(out_dir) / "run_record.partial.json")
        raise ExperimentError(
            "Too many failed completions",
            f"{record.failed} of {record.issued} failed",
            partial_record=str(partial),
        )
