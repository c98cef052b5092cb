"""TOML network descriptions.

A file looks like::

    nodes = 3
    relays = [2]
    receivers = [3]                 # optional, must equal [2:N] minus relays
    feedback_rates = { 2 = 0.5 }    # bits per use, missing nodes mean 0
    input_alphabets = [2, 2, 1]
    output_alphabets = [1, 2, 2]
    channel = [ ... ]

    [[factors]]
    target = "X1"
    given = []
    table = [0.5, 0.5]
    size = 2                        # optional, inferred from the table

Index order. ``channel`` is P(y1..yN | x1..xN) flattened row-major over
(x1, ..., xN, y1, ..., yN): the last output varies fastest. A factor table
is P(target | given) flattened row-major over (given..., target), so each
consecutive run of ``size`` entries is one conditional slice.

Floats are written with their shortest round-trip repr, so load/save
reproduces every probability bit for bit.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from .network import (
    DiscreteNetwork,
    Factor,
    FactoredDistribution,
    NetworkError,
    NodeRoles,
    X,
    Y,
    parse_var,
)


class NetFileError(NetworkError):
    """Malformed network or factor file; the message names the key."""


def _need(doc: dict, key: str, where: str = ""):
    if key not in doc:
        raise NetFileError(f"{where}missing key '{key}'")
    return doc[key]


def _int_list(doc: dict, key: str, n: int | None = None) -> list[int]:
    v = _need(doc, key)
    if not isinstance(v, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in v):
        raise NetFileError(f"key '{key}': expected a list of integers")
    if n is not None and len(v) != n:
        raise NetFileError(f"key '{key}': expected {n} entries, got {len(v)}")
    return list(v)


def _floats(v, key: str) -> np.ndarray:
    if not isinstance(v, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
    ):
        raise NetFileError(f"key '{key}': expected a flat list of numbers")
    return np.array(v, dtype=float)


def _parse_toml(text: str, source: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        # the parser already reports "(at line L, column C)"
        raise NetFileError(f"{source}: {e}") from None


def network_from_dict(doc: dict) -> DiscreteNetwork:
    n = _need(doc, "nodes")
    if not isinstance(n, int) or isinstance(n, bool):
        raise NetFileError("key 'nodes': expected an integer")
    relays = _int_list(doc, "relays") if "relays" in doc else []
    rates_raw = doc.get("feedback_rates", {})
    if not isinstance(rates_raw, dict):
        raise NetFileError("key 'feedback_rates': expected a table node -> rate")
    try:
        rates = {int(k): float(v) for k, v in rates_raw.items()}
    except (TypeError, ValueError):
        raise NetFileError("key 'feedback_rates': node ids must be integers, rates numbers") from None
    try:
        roles = NodeRoles(n, frozenset(relays), rates)
    except NetworkError as e:
        raise NetFileError(f"key 'relays'/'nodes': {e}") from None
    if "receivers" in doc:
        rx = _int_list(doc, "receivers")
        if sorted(rx) != sorted(roles.receivers):
            raise NetFileError(
                f"key 'receivers': {sorted(rx)} disagrees with nodes minus relays "
                f"{sorted(roles.receivers)}"
            )
    xs = _int_list(doc, "input_alphabets", n)
    ys = _int_list(doc, "output_alphabets", n)
    ch = _floats(_need(doc, "channel"), "channel")
    expected = math.prod(xs + ys)
    if ch.size != expected:
        raise NetFileError(f"key 'channel': {ch.size} entries, expected {expected}")
    try:
        return DiscreteNetwork(roles, tuple(xs), tuple(ys), ch)
    except NetworkError as e:
        raise NetFileError(f"key 'channel': {e}") from None


def factors_from_list(items: Any, dn: DiscreteNetwork) -> FactoredDistribution:
    """Factors in file order; alphabet sizes of the conditioners come from
    the network (X, Y) or from earlier factors."""
    if not isinstance(items, list):
        raise NetFileError("key 'factors': expected an array of tables")
    sizes = {X(k): dn.input_sizes[k - 1] for k in range(1, dn.n + 1)}
    sizes.update({Y(k): dn.output_sizes[k - 1] for k in range(1, dn.n + 1)})
    out = []
    for i, item in enumerate(items):
        where = f"factors[{i}]: "
        if not isinstance(item, dict):
            raise NetFileError(f"{where}expected a table")
        target = _need(item, "target", where)
        given = item.get("given", [])
        if not isinstance(target, str) or not isinstance(given, list):
            raise NetFileError(f"{where}'target' must be a string and 'given' a list")
        where = f"factors[{i}] ({target}): "
        try:
            parse_var(target)
            for g in given:
                parse_var(g)
        except (NetworkError, TypeError) as e:
            raise NetFileError(f"{where}{e}") from None
        unknown = [g for g in given if g not in sizes]
        if unknown:
            raise NetFileError(f"{where}conditions on {unknown} before they are defined")
        table = _floats(_need(item, "table", where), f"factors[{i}].table")
        rows = math.prod(sizes[g] for g in given)
        if "size" in item:
            size = item["size"]
            if not isinstance(size, int) or size < 1:
                raise NetFileError(f"{where}'size' must be a positive integer")
        else:
            size, rem = divmod(table.size, rows)
            if rem or size < 1:
                raise NetFileError(
                    f"{where}table length {table.size} is not a multiple of {rows}"
                )
        if table.size != rows * size:
            raise NetFileError(f"{where}table length {table.size}, expected {rows * size}")
        if target in sizes and parse_var(target)[0] == "X" and sizes[target] != size:
            raise NetFileError(
                f"{where}size {size} disagrees with input alphabet {sizes[target]}"
            )
        shape = tuple(sizes[g] for g in given) + (size,)
        try:
            out.append(Factor(target, tuple(given), table.reshape(shape)))
        except NetworkError as e:
            raise NetFileError(f"{where}{e}") from None
        sizes[target] = size
    try:
        return FactoredDistribution(tuple(out))
    except NetworkError as e:
        raise NetFileError(f"key 'factors': {e}") from None


def loads(text: str, source: str = "<string>") -> tuple[DiscreteNetwork, FactoredDistribution | None]:
    doc = _parse_toml(text, source)
    try:
        dn = network_from_dict(doc)
        fd = factors_from_list(doc["factors"], dn) if "factors" in doc else None
    except NetFileError as e:
        raise NetFileError(f"{source}: {e}") from None
    return dn, fd


def load(path) -> tuple[DiscreteNetwork, FactoredDistribution | None]:
    """Read a network file; the second item is None when it has no factors."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise NetFileError(f"{p}: {e.strerror}") from None
    return loads(text, str(p))


def load_factors(path, dn: DiscreteNetwork) -> FactoredDistribution:
    """Read only the ``factors`` array of a file (which may hold just that)."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise NetFileError(f"{p}: {e.strerror}") from None
    doc = _parse_toml(text, str(p))
    if "factors" not in doc:
        raise NetFileError(f"{p}: missing key 'factors'")
    try:
        return factors_from_list(doc["factors"], dn)
    except NetFileError as e:
        raise NetFileError(f"{p}: {e}") from None


def to_dict(dn: DiscreteNetwork, fd: FactoredDistribution | None = None) -> dict:
    roles = dn.roles
    doc: dict[str, Any] = {
        "nodes": roles.n,
        "relays": sorted(roles.relays),
        "receivers": sorted(roles.receivers),
        "feedback_rates": {str(k): float(v) for k, v in sorted(roles.feedback_rates.items())},
        "input_alphabets": list(dn.input_sizes),
        "output_alphabets": list(dn.output_sizes),
        "channel": [float(v) for v in dn.channel.ravel()],
    }
    if fd is not None:
        doc["factors"] = [
            {
                "target": f.target,
                "given": list(f.given),
                "size": f.size,
                "table": [float(v) for v in f.table.ravel()],
            }
            for f in fd
        ]
    return doc


def dumps(dn: DiscreteNetwork, fd: FactoredDistribution | None = None) -> str:
    return tomli_w.dumps(to_dict(dn, fd))


def save(path, dn: DiscreteNetwork, fd: FactoredDistribution | None = None) -> None:
    Path(path).write_text(dumps(dn, fd), encoding="utf-8", newline="\n")
