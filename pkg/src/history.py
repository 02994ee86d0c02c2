import json
import logging
import sqlite3
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional

from .report import ReportDocument, Verdict


logger = logging.getLogger(__name__)


class RunHistory:
    """SQLite ledger of emitted reports, keyed by scenario digest."""

    def __init__(self, db_path: str = "./data/runs.db"):
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self._init_database()

    def _init_database(self):
        with self._get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute("""
                CREATE TABLE IF NOT EXISTS runs (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    scenario_digest TEXT NOT NULL,
                    command TEXT NOT NULL,
                    tool_version TEXT NOT NULL,
                    seed TEXT,
                    trials INTEGER,
                    horizon REAL,
                    consistent INTEGER NOT NULL DEFAULT 0,
                    divergent INTEGER NOT NULL DEFAULT 0,
                    report TEXT NOT NULL,
                    recorded_at TIMESTAMP NOT NULL
                )
            """)

            cursor.execute("""
                CREATE INDEX IF NOT EXISTS idx_digest
                ON runs(scenario_digest)
            """)

            conn.commit()
            logger.debug(f"Run history initialized at {self.db_path}")

    @contextmanager
    def _get_connection(self):
        conn = sqlite3.connect(self.db_path)
        conn.row_factory = sqlite3.Row
        try:
            yield conn
        finally:
            conn.close()

    def record(self, doc: ReportDocument) -> int:
        """
        Append a report to the ledger.

        Args:
            doc: Report document to store

        Returns:
            Row id of the stored run
        """
        simulation = doc.simulation or {}
        summary = doc.summary()
        with self._get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute(
                """
                INSERT INTO runs (
                    scenario_digest, command, tool_version, seed, trials, horizon,
                    consistent, divergent, report, recorded_at
                ) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
                """,
                (
                    doc.scenario_digest,
                    doc.command,
                    doc.tool_version,
                    # sqlite integers are signed 64-bit
                    str(simulation["seed"]) if "seed" in simulation else None,
                    simulation.get("trials"),
                    simulation.get("horizon"),
                    summary[Verdict.CONSISTENT.value],
                    summary[Verdict.DIVERGENT.value],
                    json.dumps(doc.payload(), sort_keys=True),
                    datetime.now().isoformat(),
                ),
            )
            conn.commit()
            run_id = cursor.lastrowid
        logger.info(f"Recorded {doc.command} run {run_id} for scenario {doc.scenario_digest[:12]}")
        return run_id

    def runs(self, digest: Optional[str] = None, limit: Optional[int] = None) -> List[Dict]:
        """List recorded runs, newest first, optionally for one scenario digest."""
        query = "SELECT id, scenario_digest, command, tool_version, seed, trials, horizon, consistent, divergent, recorded_at FROM runs"
        params: list = []
        if digest:
            query += " WHERE scenario_digest = ?"
            params.append(digest)
        query += " ORDER BY id DESC"
        if limit:
            query += " LIMIT ?"
            params.append(limit)

        with self._get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute(query, params)
            return [dict(row) for row in cursor.fetchall()]

    def report(self, run_id: int) -> Optional[Dict]:
        with self._get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute("SELECT report FROM runs WHERE id = ?", (run_id,))
            row = cursor.fetchone()
            return json.loads(row["report"]) if row else None

    def get_statistics(self) -> Dict:
        with self._get_connection() as conn:
            cursor = conn.cursor()

            cursor.execute("SELECT COUNT(*) as total FROM runs")
            total = cursor.fetchone()["total"]

            cursor.execute("SELECT COUNT(DISTINCT scenario_digest) as scenarios FROM runs")
            scenarios = cursor.fetchone()["scenarios"]

            cursor.execute("SELECT COUNT(*) as divergent FROM runs WHERE divergent > 0")
            divergent = cursor.fetchone()["divergent"]

            return {"total_runs": total, "scenarios": scenarios, "divergent_runs": divergent}
