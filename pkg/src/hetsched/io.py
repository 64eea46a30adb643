"""Instance files and report serialisation.

Floats are written with ``repr`` (the shortest string that reads back to the
same double), so every number round-trips bit-exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json

from .model import MODES, WEIGHTED, Instance, Job
from .power import PowerFunction


class InstanceFormatError(ValueError):
    pass


def instance_to_dict(instance: Instance) -> dict:
    return {
        "mode": instance.mode,
        "machines": [pf.to_dict() for pf in instance.machines],
        "jobs": [{"id": j.id, "release": j.release, "size": j.size, "weight": j.weight}
                 for j in instance.jobs],
    }


def instance_from_dict(d: dict) -> Instance:
    if not isinstance(d, dict):
        raise InstanceFormatError("instance must be a JSON object")
    mode = d.get("mode", WEIGHTED)
    if mode not in MODES:
        raise InstanceFormatError(f"mode must be one of {MODES}, got {mode!r}")
    try:
        machines = tuple(PowerFunction.from_dict(m) for m in d["machines"])
        jobs = tuple(Job(int(j["id"]), float(j["release"]), float(j["size"]),
                         float(j.get("weight", 1.0))) for j in d.get("jobs", []))
        return Instance(machines, jobs, mode)
    except KeyError as exc:
        raise InstanceFormatError(f"missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(str(exc)) from None


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def dumps_instance(instance: Instance) -> str:
    return dumps(instance_to_dict(instance))


def loads_instance(text: str, source="<instance>") -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        line = lines[exc.lineno - 1] if exc.lineno <= len(lines) else ""
        raise InstanceFormatError(
            f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line.strip()}") from None
    try:
        return instance_from_dict(data)
    except InstanceFormatError as exc:
        raise InstanceFormatError(f"{source}: {exc}") from None


def load_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return loads_instance(fh.read(), str(path))


def save_instance(instance: Instance, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_instance(instance))


def instance_digest(instance: Instance) -> str:
    text = json.dumps(instance_to_dict(instance), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()
