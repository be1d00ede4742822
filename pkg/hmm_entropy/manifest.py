"""Run manifests: what was run, on which model, and what came out."""
import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, List, Optional

from .errors import ReplayMismatchError

MANIFEST_FORMAT = "hmm-entropy/manifest"
REAL_TOLERANCE = 1e-12


def atomic_write(path: str, text: str) -> None:
    """
    Write text to path through a temporary file in the same directory and
    os.replace, so readers never see a partial file.
    """
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".hmm-entropy-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def to_json(document: Any) -> str:
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class RunManifest:
    """
    Record of one command run.

    Attributes:
        command (str): Subcommand name.
        params (dict): Every parameter needed to re-run the command.
        model_hash (Optional[str]): SHA-256 of the canonical model document.
        version (str): Package version that produced the payload.
        timestamp (str): UTC time of the run, ISO 8601.
        payload (dict): The command's output document.
    """

    command: str
    params: dict
    model_hash: Optional[str]
    version: str
    payload: dict
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def to_document(self) -> dict:
        return {
            "format": MANIFEST_FORMAT,
            "command": self.command,
            "params": self.params,
            "model_hash": self.model_hash,
            "version": self.version,
            "timestamp": self.timestamp,
            "payload": self.payload,
        }

    @classmethod
    def from_document(cls, doc: dict) -> "RunManifest":
        if doc.get("format") != MANIFEST_FORMAT:
            raise ReplayMismatchError(f"not a run manifest: {doc.get('format')!r}")
        return cls(
            command=doc["command"],
            params=doc["params"],
            model_hash=doc.get("model_hash"),
            version=doc["version"],
            payload=doc["payload"],
            timestamp=doc["timestamp"],
        )

    def write(self, path: str) -> None:
        atomic_write(path, to_json(self.to_document()))

    @classmethod
    def read(cls, path: str) -> "RunManifest":
        try:
            with open(path, "r", encoding="utf8") as f:
                doc = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ReplayMismatchError(f"could not read manifest {path}: {e}")
        return cls.from_document(doc)


def _as_real(value: Any) -> Optional[float]:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return None
    return None


def compare_payloads(expected: Any, actual: Any, path: str = "$",
                     tolerance: float = REAL_TOLERANCE) -> List[str]:
    """
    Differences between two payloads.

    Exact fields (rational strings, integers, labels) must be identical;
    decimal fields may differ by tolerance relative to max(1, |expected|).
    """
    if isinstance(expected, dict) and isinstance(actual, dict):
        problems = []
        for key in sorted(set(expected) | set(actual)):
            if key not in actual:
                problems.append(f"{path}.{key}: missing from replay")
            elif key not in expected:
                problems.append(f"{path}.{key}: not in manifest")
            else:
                problems.extend(compare_payloads(expected[key], actual[key], f"{path}.{key}", tolerance))
        return problems
    if isinstance(expected, list) and isinstance(actual, list):
        if len(expected) != len(actual):
            return [f"{path}: length {len(expected)} != {len(actual)}"]
        problems = []
        for i, (a, b) in enumerate(zip(expected, actual)):
            problems.extend(compare_payloads(a, b, f"{path}[{i}]", tolerance))
        return problems
    if expected == actual:
        return []
    a, b = _as_real(expected), _as_real(actual)
    exact = isinstance(expected, int) and not isinstance(expected, bool)
    if a is None or b is None or exact:
        return [f"{path}: {expected!r} != {actual!r}"]
    if abs(a - b) > tolerance * max(1.0, abs(a)):
        return [f"{path}: {expected!r} != {actual!r} (gap {abs(a - b):.3e})"]
    return []
