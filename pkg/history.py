"""
Ledger of experiment runs
"""

import json
import logging
from datetime import datetime
from pathlib import Path

from config import HISTORY_ENTRIES, HISTORY_FILE

logger = logging.getLogger(__name__)


class RunHistory:
    """Manage the experiment run ledger"""

    def __init__(self, filepath=HISTORY_FILE, limit=HISTORY_ENTRIES):
        self.filepath = Path(filepath)
        self.limit = limit

    def load_history(self):
        """Load recorded runs, oldest first"""
        if not self.filepath.exists():
            return []
        try:
            with open(self.filepath, "r", encoding="utf-8") as f:
                history = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            logger.warning("Ignoring unreadable history file %s: %s", self.filepath, exc)
            return []
        return history if isinstance(history, list) else []

    def record_run(self, name, passed, runtime, when=None):
        """Append one run and keep the last `limit` entries"""
        when = when or datetime.now()
        history = self.load_history()
        history.append({
            "date": when.strftime("%Y-%m-%d %H:%M:%S"),
            "name": name,
            "passed": passed,
            "runtime": round(float(runtime), 3),
        })
        history = history[-self.limit:]

        self.filepath.parent.mkdir(parents=True, exist_ok=True)
        with open(self.filepath, "w", encoding="utf-8") as f:
            json.dump(history, f, indent=2)
        return history

    def last_verdicts(self):
        """Most recent entry per experiment name"""
        latest = {}
        for entry in self.load_history():
            latest[entry.get("name")] = entry
        return latest

    def pass_rate(self, name, lookback=10):
        """Share of passing runs among the last `lookback` runs of one experiment"""
        runs = [h for h in self.load_history() if h.get("name") == name and h.get("passed") is not None]
        recent = runs[-lookback:]
        if not recent:
            return None
        return sum(1 for h in recent if h["passed"]) / len(recent)
