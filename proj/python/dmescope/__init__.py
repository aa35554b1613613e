"""Find data manipulation errors in GUI apps.

Thin wrappers over the native core. Structured values are plain dicts and
lists in the JSON shapes the command-line tool reads and writes.
"""

import json as _json

from . import _core
from ._core import Error

__all__ = [
    "Error",
    "SimApp",
    "collect",
    "explore",
    "fuzz",
    "identify_dums",
    "main",
    "parse_snapshot",
    "replay",
    "run_cli",
    "serialize_snapshot",
    "sim_align",
    "sim_structure",
    "tree_edit_distance",
]


def _dump(value):
    return value if isinstance(value, str) else _json.dumps(value)


def tree_edit_distance(a, b):
    return _core.tree_edit_distance(_dump(a), _dump(b))


def sim_structure(a, b):
    return _core.sim_structure(_dump(a), _dump(b))


def sim_align(a, b, lambda_=0.5):
    return _core.sim_align(_dump(a), _dump(b), lambda_)


def parse_snapshot(xml):
    return _json.loads(_core.parse_snapshot(xml))


def serialize_snapshot(snapshot):
    return _core.serialize_snapshot(_dump(snapshot))


def identify_dums(snapshot, strings=(), structure_threshold=0.2, align_threshold=100.0):
    return _json.loads(_core.identify_dums(_dump(snapshot), list(strings), structure_threshold, align_threshold))


class SimApp:
    """A simulated app loaded from an app spec file."""

    def __init__(self, path):
        self._env = _core.SimApp(str(path))

    @property
    def name(self):
        return self._env.name

    def snapshot(self):
        return _json.loads(self._env.snapshot())

    def actions(self):
        return _json.loads(self._env.actions())

    def perform(self, event):
        """Returns (valid, crashed, message)."""
        return self._env.perform(_dump(event))

    def save(self):
        return self._env.save()

    def restore(self, snapshot_id):
        self._env.restore(snapshot_id)

    def drain_log(self):
        return self._env.drain_log()

    def describe(self):
        return self._env.describe()

    def records(self, store):
        return self._env.records(store)


def explore(app, budget=0, seed=0):
    return _json.loads(_core.explore(str(app), budget, seed))


def collect(app, dums, script, types=()):
    return _json.loads(_core.collect(str(app), _dump(dums), str(script), list(types)))


def fuzz(app, dmfs, script="", budget=500, seed=7):
    return _json.loads(_core.fuzz(str(app), _dump(dmfs), str(script), budget, seed))


def replay(app, report, script=""):
    return _json.loads(_core.replay(str(app), _dump(report), str(script)))


def run_cli(args):
    """Runs the command-line tool in-process; returns (exit_code, stdout, stderr)."""
    return _core.run_cli([str(a) for a in args])


def main():
    import sys

    code, out, err = run_cli(sys.argv[1:])
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code
