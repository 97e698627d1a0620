"""YAML config loading with per-field line tracking.

Both the metric spec files and the run config files are plain YAML trees.
Semantic errors must cite the offending field and its source line, so the
loader walks the composed node graph instead of using yaml.safe_load.
"""
from __future__ import annotations

import yaml

from .errors import ConfigInvalid


class Tracked:
    """A parsed YAML tree where every value remembers its source line."""

    def __init__(self, value, lines):
        self.value = value      # plain python tree (dict / list / scalar)
        self._lines = lines     # dotted path -> 1-based line

    def line(self, path: str):
        return self._lines.get(path)

    def get(self, path: str, default=None):
        node = self.value
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def require(self, path: str):
        sentinel = object()
        got = self.get(path, sentinel)
        if got is sentinel:
            raise ConfigInvalid(f"missing required field '{path}'", field=path)
        return got

    def fail(self, path: str, message: str):
        raise ConfigInvalid(message, field=path, line=self.line(path))


def _build(node, path, lines):
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for knode, vnode in node.value:
            key = str(knode.value)
            sub = f"{path}.{key}" if path else key
            out[key] = _build(vnode, sub, lines)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_build(v, f"{path}[{i}]", lines) for i, v in enumerate(node.value)]
    return yaml.safe_load(yaml.serialize(node))


def load_tracked(path) -> Tracked:
    with open(path, "r") as fh:
        text = fh.read()
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigInvalid(f"YAML parse error in {path}: {exc}", field="<document>", line=line)
    if root is None:
        raise ConfigInvalid(f"empty config file {path}", field="<document>")
    lines = {}
    value = _build(root, "", lines)
    if not isinstance(value, dict):
        raise ConfigInvalid(f"top level of {path} must be a mapping", field="<document>", line=1)
    return Tracked(value, lines)
