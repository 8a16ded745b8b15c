"""Scenario configuration trees: YAML loading, overrides and validation.

A configuration is a nested mapping with the sections

    scenario: <preset name>        # optional when the preset is given on the command line
    seed: <int>
    model:    theta, lam, jbar, sigma, tau, family, gain, init{kind, mean, var}
    network:  n_per_pop, dt, horizon, record_stride
    analysis: preset-specific settings

Matrices are written row-major as nested lists; scalars broadcast.
"""
from __future__ import annotations

import copy
from pathlib import Path
from typing import Any, Iterable

import numpy as np
import yaml

from .errors import ConfigError
from .model import ModelParams
from .network import NetworkConfig

SECTIONS = ("scenario", "seed", "model", "network", "analysis")
MODEL_KEYS = ("theta", "lam", "jbar", "sigma", "tau", "family", "gain", "init")
NETWORK_KEYS = ("n_per_pop", "dt", "horizon", "record_stride")


def load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", "<file>") from None
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}", "<file>") from None
    if tree is None:
        tree = {}
    if not isinstance(tree, dict):
        raise ConfigError("top level must be a mapping", "<root>")
    return tree


def check_sections(tree: dict) -> None:
    unknown = sorted(set(tree) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s) {unknown}", unknown[0])
    for sec in ("model", "network", "analysis"):
        if sec in tree and not isinstance(tree[sec], dict):
            raise ConfigError("must be a mapping", sec)
    if "seed" in tree and (isinstance(tree["seed"], bool) or not isinstance(tree["seed"], int) or tree["seed"] < 0):
        raise ConfigError("must be a non-negative integer", "seed")


def merge(base: dict, top: dict) -> dict:
    """Recursive merge; mappings merge key by key, everything else replaces."""
    out = copy.deepcopy(base)
    for k, v in top.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve_key(key: str, tree: dict) -> tuple[str, ...]:
    """Dotted path for an override key; bare model and network keys need no section prefix."""
    if not key:
        raise ConfigError("empty override key", "<override>")
    if "." in key:
        parts = tuple(key.split("."))
        if parts[0] not in SECTIONS:
            raise ConfigError(f"unknown section {parts[0]!r}", key)
        return parts
    if key in ("seed", "scenario"):
        return (key,)
    if key in MODEL_KEYS:
        return ("model", key)
    if key in NETWORK_KEYS:
        return ("network", key)
    if key in tree.get("analysis", {}):
        return ("analysis", key)
    raise ConfigError(f"unknown override key {key!r}", key)


def parse_override(text: str) -> tuple[str, Any]:
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not key=value", "<override>")
    key, raw = text.split("=", 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError:
        raise ConfigError(f"cannot parse value {raw!r}", key.strip()) from None
    return key.strip(), value


def apply_overrides(tree: dict, overrides: Iterable[str]) -> tuple[dict, frozenset[str]]:
    """Apply ``key=value`` strings; returns the new tree and the dotted paths that were set."""
    out = copy.deepcopy(tree)
    touched = set()
    for text in overrides:
        key, value = parse_override(text)
        path = resolve_key(key, out)
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError("cannot set a key below a scalar", ".".join(path))
        node[path[-1]] = value
        touched.add(".".join(path))
    return out, frozenset(touched)


def build_params(tree: dict) -> ModelParams:
    model = tree.get("model")
    if not isinstance(model, dict):
        raise ConfigError("missing model section", "model")
    try:
        return ModelParams.from_dict(model)
    except ConfigError as exc:
        if exc.field and exc.field != "model" and not exc.field.startswith("model."):
            raise ConfigError(str(exc).split(": ", 1)[-1], "model." + exc.field) from None
        raise


def build_network(tree: dict, params: ModelParams, seed: int | None = None) -> NetworkConfig:
    net = tree.get("network")
    if not isinstance(net, dict):
        raise ConfigError("missing network section", "network")
    unknown = sorted(set(net) - set(NETWORK_KEYS))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", "network." + unknown[0])
    for key in ("n_per_pop", "dt", "horizon"):
        if key not in net:
            raise ConfigError("required", "network." + key)
    try:
        n = np.broadcast_to(np.asarray(net["n_per_pop"]), (params.M,))
        if not np.all(n == np.round(n)):
            raise ConfigError("population sizes must be integers", "network.n_per_pop")
        stride = net.get("record_stride", 1)
        if isinstance(stride, bool) or int(stride) != stride:
            raise ConfigError("must be an integer", "network.record_stride")
        return NetworkConfig(params, tuple(int(v) for v in n), float(net["dt"]), float(net["horizon"]),
                             seed=int(tree.get("seed", 0) if seed is None else seed), record_stride=int(stride))
    except ConfigError as exc:
        if exc.field and not exc.field.startswith("network."):
            raise ConfigError(str(exc).split(": ", 1)[-1], "network." + exc.field) from None
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "network") from None


def validate(tree: dict) -> tuple[ModelParams, NetworkConfig | None]:
    """Check the sections and build the model (and network, when present)."""
    check_sections(tree)
    params = build_params(tree)
    net = build_network(tree, params) if "network" in tree else None
    return params, net
