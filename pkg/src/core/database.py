"""Database module - raw experiment results stored locally with SQLAlchemy"""

import json
import logging
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, List, Dict, Any

from sqlalchemy import (
    create_engine,
    Column,
    Integer,
    String,
    Text,
    DateTime,
    ForeignKey,
    Index,
    func,
)
from sqlalchemy.orm import declarative_base, sessionmaker, relationship, Session

logger = logging.getLogger(__name__)

Base = declarative_base()


def now_utc():
    return datetime.now(timezone.utc)


def to_utc_iso(dt: datetime | None) -> str:
    """ISO timestamp in UTC; naive datetimes are taken to be UTC already"""
    if dt is None:
        return ""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).isoformat()


class Run(Base):
    """One experiment run"""

    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    kind = Column(String(50), nullable=False, index=True)
    agent = Column(String(200), nullable=False)
    config_json = Column(Text, nullable=False)
    status = Column(String(20), nullable=False, default="running")  # running, completed, aborted
    issued = Column(Integer, nullable=False, default=0)
    failed = Column(Integer, nullable=False, default=0)
    started_at = Column(DateTime, default=now_utc)
    finished_at = Column(DateTime, nullable=True)

    completions = relationship("Completion", back_populates="run", cascade="all, delete-orphan")


class Completion(Base):
    """One issued completion, stored before any aggregation"""

    __tablename__ = "completions"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey("runs.id"), nullable=False, index=True)
    item_key = Column(String(200), nullable=False)
    sample_index = Column(Integer, nullable=False, default=0)
    completion_index = Column(Integer, nullable=False, default=0)
    shuffle_seed = Column(Integer, nullable=False)
    swapped = Column(Integer, nullable=False, default=0)
    prompt_hash = Column(String(64), nullable=False)
    raw_text = Column(Text, nullable=True)
    verdict = Column(String(50), nullable=True)
    status = Column(String(20), nullable=False)  # parsed, reprompted, failed
    error_kind = Column(String(100), nullable=True)
    created_at = Column(DateTime, default=now_utc)

    run = relationship("Run", back_populates="completions")

    __table_args__ = (Index("ix_completions_run_item", "run_id", "item_key", "sample_index"),)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "item_key": self.item_key,
            "sample_index": self.sample_index,
            "completion_index": self.completion_index,
            "shuffle_seed": self.shuffle_seed,
            "swapped": bool(self.swapped),
            "prompt_hash": self.prompt_hash,
            "raw_text": self.raw_text,
            "verdict": self.verdict,
            "status": self.status,
            "error_kind": self.error_kind,
        }


class DatabaseManager:
    """Run store over one SQLite file"""

    def __init__(self, db_path: str):
        """
        Args:
            db_path: SQLite file; parent directories are created
        """
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)

        self.engine = create_engine(
            f"sqlite:///{self.db_path}",
            echo=False,
            connect_args={"check_same_thread": False},
        )
        self.SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=self.engine)
        self._create_tables()

    def _create_tables(self):
        Base.metadata.create_all(bind=self.engine)

    @contextmanager
    def get_session(self) -> Session:
        """Session context manager; commits on success, rolls back on error"""
        session = self.SessionLocal()
        try:
            yield session
            session.commit()
        except Exception:
            session.rollback()
            raise
        finally:
            session.close()

    def create_run(self, kind: str, agent: str, config: Dict[str, Any]) -> int:
        with self.get_session() as session:
            run = Run(kind=kind, agent=agent, config_json=json.dumps(config, sort_keys=True))
            session.add(run)
            session.flush()
            logger.info(f"Started run {run.id} ({kind}, agent={agent})")
            return run.id

    def save_completions(self, run_id: int, rows: List[Dict[str, Any]]) -> int:
        """Insert completion rows and bump the run's issued/failed tallies"""
        if not rows:
            return 0
        with self.get_session() as session:
            session.add_all([Completion(run_id=run_id, **row) for row in rows])
            run = session.get(Run, run_id)
            run.issued += len(rows)
            run.failed += sum(1 for row in rows if row.get("status") == "failed")
        return len(rows)

    def finish_run(self, run_id: int, status: str = "completed") -> None:
        with self.get_session() as session:
            run = session.get(Run, run_id)
            run.status = status
            run.finished_at = now_utc()

    def get_run(self, run_id: int) -> Optional[Dict[str, Any]]:
        with self.get_session() as session:
            run = session.get(Run, run_id)
            if run is None:
                return None
            return {
                "id": run.id,
                "kind": run.kind,
                "agent": run.agent,
                "config": json.loads(run.config_json),
                "status": run.status,
                "issued": run.issued,
                "failed": run.failed,
                "started_at": to_utc_iso(run.started_at),
                "finished_at": to_utc_iso(run.finished_at),
            }

    def list_completions(self, run_id: int) -> List[Dict[str, Any]]:
        """Completions of a run in insertion order"""
        with self.get_session() as session:
            rows = (
                session.query(Completion)
                .filter(Completion.run_id == run_id)
                .order_by(Completion.id)
                .all()
            )
            return [row.to_dict() for row in rows]

    def count_completions(self, run_id: int, status: Optional[str] = None) -> int:
        with self.get_session() as session:
            query = session.query(func.count(Completion.id)).filter(Completion.run_id == run_id)
            if status:
                query = query.filter(Completion.status == status)
            return query.scalar() or 0

    def close(self) -> None:
        self.engine.dispose()
