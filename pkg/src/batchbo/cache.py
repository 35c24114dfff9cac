"""On-disk cache of run histories.

Entries are keyed by the resolved run config together with a digest of
the modules that determine a run's numbers. The digest is taken over the
syntax tree with docstrings removed, so editing prose does not invalidate
finished runs while any code change does.
"""

from __future__ import annotations

import ast
import dataclasses
import hashlib
import json
from functools import lru_cache
from pathlib import Path
from typing import List, Sequence

from batchbo.bench import config_to_dict, read_history, run_seeds, write_history
from batchbo.loop import RunConfig, RunHistory

CORE_MODULES = ("_search", "objectives", "sampling", "gpr", "acquisition", "batch", "loop")


def _strip_docstrings(tree: ast.AST) -> ast.AST:
    for node in ast.walk(tree):
        if isinstance(node, (ast.Module, ast.ClassDef, ast.FunctionDef, ast.AsyncFunctionDef)):
            body = node.body
            if body and isinstance(body[0], ast.Expr) and isinstance(getattr(body[0], "value", None), ast.Constant) \
                    and isinstance(body[0].value.value, str):
                node.body = body[1:] or [ast.Pass()]
    return tree


@lru_cache(maxsize=1)
def core_digest() -> str:
    h = hashlib.sha256()
    pkg = Path(__file__).parent
    for name in CORE_MODULES:
        tree = _strip_docstrings(ast.parse((pkg / f"{name}.py").read_text()))
        h.update(name.encode())
        h.update(ast.dump(tree).encode())
    return h.hexdigest()[:16]


def cache_key(cfg: RunConfig) -> str:
    d = config_to_dict(dataclasses.replace(cfg, seed=0))
    blob = json.dumps({"config": d, "core": core_digest()}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:20]


def cached_runs(cfg: RunConfig, seeds: Sequence[int], root: Path, parallel: int = 1) -> List[RunHistory]:
    """Histories for ``cfg`` at every seed, running only the missing ones."""
    cell = Path(root) / cache_key(cfg)
    missing = [s for s in seeds if not (cell / f"seed_{s}_obs.csv").exists()]
    if missing:
        for h in run_seeds(cfg, missing, parallel):
            write_history(h, cell)
        (cell / "config.json").write_text(json.dumps(config_to_dict(cfg), indent=2, sort_keys=True))
    return [read_history(dataclasses.replace(cfg, seed=s), cell) for s in seeds]
