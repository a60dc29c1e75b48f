"""JSON-Lines persistence of event logs.

Line 1 is a header object ``{version, params, mode, angles, seed,
n_trials, truncate_on_herald}``; every following line is one event
``{"trial": int, "det": "S1"|"S2"|"AS1"|"AS2", "t_ns": number,
"win": "W"|"R"}``.  Floats are written with ``repr`` precision, so a
serialize/parse round trip is exact and the same log always produces the
same bytes.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .params import ExperimentParams
from .trialsim import (DETECTOR_CODES, DETECTOR_NAMES, FORMAT_VERSION,
                       EventLog, TrialMode)


class EventLogParseError(ValueError):
    """Malformed event-log file."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def header_dict(log: EventLog) -> dict:
    return {
        "version": log.version,
        "params": dataclasses.asdict(log.params),
        "mode": log.mode.value,
        "angles": {"theta_s": log.theta_s, "theta_as": log.theta_as},
        "seed": log.seed,
        "n_trials": log.n_trials,
        "truncate_on_herald": log.truncate_on_herald,
    }


def write_jsonl(log: EventLog, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header_dict(log), sort_keys=True) + "\n")
        for i in range(len(log)):
            fh.write(
                '{"trial": %d, "det": "%s", "t_ns": %s, "win": "%s"}\n'
                % (log.trial[i], DETECTOR_NAMES[log.det[i]],
                   repr(float(log.t_ns[i])), "WR"[log.win[i]])
            )


def read_jsonl(path: str | Path) -> EventLog:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise EventLogParseError("missing header", 1)
        try:
            header = json.loads(first)
        except json.JSONDecodeError as exc:
            raise EventLogParseError(f"invalid JSON header: {exc}", 1) from exc
        for key in ("version", "params", "mode", "angles", "seed", "n_trials"):
            if key not in header:
                raise EventLogParseError(f"header lacks key {key!r}", 1)
        if header["version"] != FORMAT_VERSION:
            raise EventLogParseError(
                f"unsupported format version {header['version']!r}", 1)
        try:
            params = ExperimentParams(**header["params"])
            mode = TrialMode(header["mode"])
        except (TypeError, ValueError) as exc:
            raise EventLogParseError(f"invalid header: {exc}", 1) from exc

        trials, dets, times, wins = [], [], [], []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                ev = json.loads(line)
                trials.append(int(ev["trial"]))
                dets.append(DETECTOR_CODES[ev["det"]])
                times.append(float(ev["t_ns"]))
                wins.append({"W": 0, "R": 1}[ev["win"]])
            except (json.JSONDecodeError, KeyError, TypeError,
                    ValueError) as exc:
                raise EventLogParseError(f"invalid event: {exc}",
                                         lineno) from exc
    return EventLog(
        params, header["angles"]["theta_s"], header["angles"]["theta_as"],
        mode, header["seed"], header["n_trials"],
        np.array(trials, dtype=np.int64), np.array(dets, dtype=np.int8),
        np.array(times, dtype=np.float64), np.array(wins, dtype=np.int8),
        header.get("truncate_on_herald", True))
