"""
This module provides scenario documents: parsing, parameter overrides, validation and seed-generated layouts.

A scenario is a JSON object:

.. code-block:: json

    {
        "arena": {"width": 1000, "height": 1000},
        "obstacles": [{"min": [100, 100], "max": [200, 150]}],
        "obstacles_random": {"count": 6, "min_side": 50, "max_side": 150, "clearance": 100},
        "targets": [[500, 500]],
        "targets_random": {"count": 10},
        "robots_random": {"count": 20},
        "signal": {"a": 10, "epsilon": 5},
        "bso": {"p_one": 0.4, "p_center": 0.8, "noise_base": 50},
        "rbso": {"m_g": 5, "T_g": 20000, "m_d": 250, "m_s": 500, "step_length": 2, "d_safe": 3},
        "seed": 0
    }

``targets`` and ``targets_random`` are mutually exclusive. Every ``*_random`` section accepts an optional ``seed``;
when omitted, the layout is derived from the top-level ``seed``.

>>> scenario = load_scenario('{"arena": {"width": 100, "height": 100}, "robots_random": {"count": 4}}')
>>> scenario.env.width, scenario.env.population_n, scenario.params.grouping.max_groups
(100.0, 4, 2)
>>> load_scenario('{"arena": {"width": 100, "height": 100}, "robots_random": {"count": 4}, "colour": "red"}')
Traceback (most recent call last):
...
pyrbso.commons.errors.ScenarioError: Invalid scenario at 'colour': unknown key
"""

__all__ = [
    "Scenario",
    "apply_override",
    "load_scenario",
    "parse_override",
    "read_scenario",
]

import copy
import json
import math
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from ..commons.errors import PackingError, ScenarioError
from ..commons.geometry import Point
from ..engine import SimParams
from .world import EnvironmentSpec, Rectangle

if TYPE_CHECKING:
    from typing_extensions import TypeGuard
else:
    try:
        from typing import TypeGuard
    except ImportError:
        from typing_extensions import TypeGuard

#: Defines the accepted keys of every section (``None`` for leaves and lists).
_SCHEMA: Dict[str, Optional[Tuple[str, ...]]] = {
    "arena": ("width", "height"),
    "obstacles": None,
    "obstacles_random": ("count", "min_side", "max_side", "clearance", "seed"),
    "targets": None,
    "targets_random": ("count", "seed"),
    "robots_random": ("count", "seed"),
    "signal": ("a", "epsilon"),
    "bso": ("p_one", "p_center", "noise_base"),
    "rbso": ("m_g", "T_g", "m_d", "m_s", "step_length", "d_safe", "sample_dt", "patience", "refresh_pbest"),
    "seed": None,
}

#: Defines the number of rejection sampling attempts granted per placed layout item.
LAYOUT_ATTEMPTS = 10000

#: Stream salt of obstacle layouts.
_OBSTACLES_SALT = 11

#: Stream salt of target layouts.
_TARGETS_SALT = 12


class Scenario(NamedTuple):
    """
    Defines a loaded scenario.
    """

    #: Environment.
    env: EnvironmentSpec

    #: Simulation parameters.
    params: SimParams


def _is_number(value: Any) -> TypeGuard[float]:
    """
    Type guard for JSON numbers (booleans excluded).

    >>> _is_number(1), _is_number(1.5), _is_number(True), _is_number("1")
    (True, True, False, False)
    """
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _is_integer(value: Any) -> TypeGuard[int]:
    """
    Type guard for JSON integers (booleans excluded, integral floats accepted).
    """
    return _is_number(value) and float(value).is_integer()


def parse_override(expression: str) -> Tuple[str, Any]:
    """
    Parses a ``dotted.path=value`` override expression. Values are JSON literals, falling back to plain strings.

    >>> parse_override("rbso.m_s=300")
    ('rbso.m_s', 300)
    >>> parse_override("signal.a=1e1")
    ('signal.a', 10.0)
    >>> parse_override("name=reference")
    ('name', 'reference')
    """
    path, sep, raw = expression.partition("=")
    if not sep or not path.strip():
        raise ScenarioError(expression, "override must read 'path=value'")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return path.strip(), value


def apply_override(document: Dict[str, Any], path: str, value: Any) -> Dict[str, Any]:
    """
    Returns a copy of the document with the value set at the dotted path. Numeric segments index lists.

    >>> apply_override({"rbso": {"m_s": 500}}, "rbso.m_s", 300)
    {'rbso': {'m_s': 300}}
    >>> apply_override({}, "signal.a", 5)
    {'signal': {'a': 5}}
    >>> apply_override({"targets": [[1, 2]]}, "targets.0", [3, 4])
    {'targets': [[3, 4]]}
    """
    result = copy.deepcopy(document)
    node: Any = result
    keys = path.split(".")
    for depth, key in enumerate(keys):
        last = depth == len(keys) - 1
        if isinstance(node, list):
            if not key.isdigit() or int(key) >= len(node):
                raise ScenarioError(path, f"no list element '{key}'")
            if last:
                node[int(key)] = value
            else:
                node = node[int(key)]
        elif isinstance(node, dict):
            if last:
                node[key] = value
            else:
                node = node.setdefault(key, {})
        else:
            raise ScenarioError(path, f"can not descend into '{key}'")
    return result


class _Reader:
    """
    Provides typed, path-aware access to a scenario document.
    """

    def __init__(self, document: Mapping[str, Any]) -> None:
        self.document = document

    def section(self, name: str) -> Mapping[str, Any]:
        value = self.document.get(name, {})
        if not isinstance(value, Mapping):
            raise ScenarioError(name, "must be an object")
        return value

    def number(self, section: str, key: str, default: Optional[float] = None) -> float:
        value = self.section(section).get(key, default)
        if value is None:
            raise ScenarioError(f"{section}.{key}", "is required")
        if not _is_number(value):
            raise ScenarioError(f"{section}.{key}", "must be a number")
        return float(value)

    def integer(self, section: str, key: str, default: Optional[int] = None) -> int:
        value = self.section(section).get(key, default)
        if value is None:
            raise ScenarioError(f"{section}.{key}", "is required")
        if not _is_integer(value):
            raise ScenarioError(f"{section}.{key}", "must be an integer")
        return int(value)

    def seed(self, section: str) -> Optional[int]:
        if self.section(section).get("seed") is None:
            return None
        value = self.integer(section, "seed")
        if value < 0:
            raise ScenarioError(f"{section}.seed", "must not be negative")
        return value

    def flag(self, section: str, key: str, default: bool) -> bool:
        value = self.section(section).get(key, default)
        if not isinstance(value, bool):
            raise ScenarioError(f"{section}.{key}", "must be a boolean")
        return value


def _check_keys(document: Mapping[str, Any]) -> None:
    """
    Rejects unknown keys.
    """
    for key, value in document.items():
        if key not in _SCHEMA:
            raise ScenarioError(key, "unknown key")
        allowed = _SCHEMA[key]
        if allowed is not None and isinstance(value, Mapping):
            for subkey in value:
                if subkey not in allowed:
                    raise ScenarioError(f"{key}.{subkey}", "unknown key")


def _point(value: Any, path: str) -> Point:
    if not (isinstance(value, (list, tuple)) and len(value) == 2 and all(_is_number(v) for v in value)):
        raise ScenarioError(path, "must be a pair of numbers")
    return Point(float(value[0]), float(value[1]))


def _explicit_obstacles(document: Mapping[str, Any]) -> List[Rectangle]:
    entries = document.get("obstacles", [])
    if not isinstance(entries, list):
        raise ScenarioError("obstacles", "must be a list")
    obstacles = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, Mapping) or set(entry) != {"min", "max"}:
            raise ScenarioError(f"obstacles[{i}]", "must be an object with 'min' and 'max' only")
        lo, hi = _point(entry["min"], f"obstacles[{i}].min"), _point(entry["max"], f"obstacles[{i}].max")
        if not (lo[0] < hi[0] and lo[1] < hi[1]):
            raise ScenarioError(f"obstacles[{i}]", "min must be smaller than max component-wise")
        obstacles.append(Rectangle(lo, hi))
    return obstacles


def _explicit_targets(document: Mapping[str, Any]) -> List[Point]:
    entries = document.get("targets", [])
    if not isinstance(entries, list):
        raise ScenarioError("targets", "must be a list")
    return [_point(entry, f"targets[{i}]") for i, entry in enumerate(entries)]


def _stream(seed: Optional[int], base: int, salt: int) -> np.random.Generator:
    return np.random.default_rng(seed if seed is not None else [base, salt])


def _gap(a: Rectangle, b: Rectangle) -> float:
    """
    Returns the Euclidean gap between two rectangles (``0`` if they touch or overlap).

    >>> _gap(Rectangle(Point(0.0, 0.0), Point(1.0, 1.0)), Rectangle(Point(4.0, 5.0), Point(6.0, 6.0)))
    5.0
    """
    dx = max(0.0, a.x0 - b.x1, b.x0 - a.x1)
    dy = max(0.0, a.y0 - b.y1, b.y0 - a.y1)
    return math.hypot(dx, dy)


def _random_obstacles(
    reader: _Reader,
    width: float,
    height: float,
    existing: Sequence[Rectangle],
    targets: Sequence[Point],
    margin: float,
    base_seed: int,
) -> List[Rectangle]:
    """
    Places seed-generated obstacles, keeping the configured clearance between obstacles and away from targets.
    """
    count = reader.integer("obstacles_random", "count")
    lo = reader.number("obstacles_random", "min_side")
    hi = reader.number("obstacles_random", "max_side", lo)
    clearance = reader.number("obstacles_random", "clearance", 0.0)
    if count < 0:
        raise ScenarioError("obstacles_random.count", "must not be negative")
    if not 0 < lo <= hi:
        raise ScenarioError("obstacles_random.min_side", "must satisfy 0 < min_side <= max_side")
    if hi >= min(width, height):
        raise ScenarioError("obstacles_random.max_side", "must be smaller than the arena")
    if clearance < 0:
        raise ScenarioError("obstacles_random.clearance", "must not be negative")
    rng = _stream(reader.seed("obstacles_random"), base_seed, _OBSTACLES_SALT)

    placed: List[Rectangle] = []
    attempts = 0
    while len(placed) < count:
        attempts += 1
        if attempts > LAYOUT_ATTEMPTS * count:
            raise PackingError("obstacles", count, LAYOUT_ATTEMPTS * count)
        w, h = rng.uniform(lo, hi, size=2)
        x, y = rng.uniform((0.0, 0.0), (width - w, height - h))
        candidate = Rectangle(Point(float(x), float(y)), Point(float(x + w), float(y + h)))
        if any(candidate.contains(t, margin) for t in targets):
            continue
        if any(_gap(candidate, o) < clearance for o in [*existing, *placed]):
            continue
        placed.append(candidate)
    return placed


def _random_targets(
    reader: _Reader, width: float, height: float, obstacles: Sequence[Rectangle], margin: float, base_seed: int
) -> List[Point]:
    """
    Places seed-generated targets uniformly outside the obstacles grown by ``margin``.
    """
    count = reader.integer("targets_random", "count")
    if count < 0:
        raise ScenarioError("targets_random.count", "must not be negative")
    rng = _stream(reader.seed("targets_random"), base_seed, _TARGETS_SALT)

    targets: List[Point] = []
    attempts = 0
    while len(targets) < count:
        attempts += 1
        if attempts > LAYOUT_ATTEMPTS * count:
            raise PackingError("targets", count, LAYOUT_ATTEMPTS * count)
        x, y = rng.uniform((0.0, 0.0), (width, height))
        candidate = Point(float(x), float(y))
        if not any(o.contains(candidate, margin) for o in obstacles):
            targets.append(candidate)
    return targets


def _params(reader: _Reader, population: int, seed: int) -> SimParams:
    """
    Reads and validates the simulation parameters.
    """
    ## Read values with defaults:
    p_one = reader.number("bso", "p_one", 0.4)
    p_center = reader.number("bso", "p_center", 0.8)
    noise_base = reader.number("bso", "noise_base", 50.0)
    m_g = reader.integer("rbso", "m_g", max(2, population // 4))
    t_g = reader.integer("rbso", "T_g", 20000)
    m_d = reader.number("rbso", "m_d", 250.0)
    m_s = reader.integer("rbso", "m_s", 500)
    step_length = reader.number("rbso", "step_length", 2.0)
    d_safe = reader.number("rbso", "d_safe", 3.0)
    sample_dt = reader.number("rbso", "sample_dt", 0.1)
    patience = reader.integer("rbso", "patience", 25)
    refresh = reader.flag("rbso", "refresh_pbest", True)

    ## Validate:
    for path, ok, reason in (
        ("bso.p_one", 0 <= p_one <= 1, "must be a probability"),
        ("bso.p_center", 0 <= p_center <= 1, "must be a probability"),
        ("bso.noise_base", noise_base > 0, "must be strictly positive"),
        ("rbso.m_g", m_g >= 2, "must be at least 2"),
        ("rbso.T_g", t_g >= 1, "must be at least 1"),
        ("rbso.m_d", m_d > 0, "must be strictly positive"),
        ("rbso.m_s", m_s >= 1, "must be at least 1"),
        ("rbso.step_length", step_length > 0, "must be strictly positive"),
        ("rbso.d_safe", d_safe > 0, "must be strictly positive"),
        ("rbso.sample_dt", sample_dt > 0, "must be strictly positive"),
        ("rbso.patience", patience >= 1, "must be at least 1"),
    ):
        if not ok:
            raise ScenarioError(path, reason)

    ## Done, build parameters:
    return SimParams.of(
        population_n=population,
        seed=seed,
        p_one=p_one,
        p_center=p_center,
        noise_base=noise_base,
        max_groups=m_g,
        global_budget=t_g,
        mean_distance_threshold=m_d,
        max_steps=m_s,
        step_length=step_length,
        d_safe=d_safe,
        sample_dt=sample_dt,
        patience=patience,
        refresh_pbest=refresh,
        robots_seed=reader.seed("robots_random"),
    )


def load_scenario(source: Union[str, Mapping[str, Any]], overrides: Sequence[str] = ()) -> Scenario:
    """
    Parses, overrides, validates and lays out a scenario.

    :param source: JSON text or an already parsed document.
    :param overrides: ``dotted.path=value`` expressions applied to the document before validation.
    :return: Environment and simulation parameters.
    :raises ScenarioError: If the document can not be parsed or is invalid.
    """
    ## Parse the document:
    if isinstance(source, str):
        try:
            parsed = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ScenarioError("<document>", f"not valid JSON ({exc})") from exc
    else:
        parsed = copy.deepcopy(dict(source))
    if not isinstance(parsed, dict):
        raise ScenarioError("<document>", "must be a JSON object")

    ## Apply overrides and check keys:
    document: Dict[str, Any] = parsed
    for expression in overrides:
        document = apply_override(document, *parse_override(expression))
    _check_keys(document)
    reader = _Reader(document)

    ## Read arena, swarm and signal:
    if not _is_integer(document.get("seed", 0)) or document.get("seed", 0) < 0:
        raise ScenarioError("seed", "must be a nonnegative integer")
    seed = int(document.get("seed", 0))
    width = reader.number("arena", "width")
    height = reader.number("arena", "height")
    population = reader.integer("robots_random", "count")
    a = reader.number("signal", "a", 10.0)
    epsilon = reader.number("signal", "epsilon", 5.0)
    if width <= 0 or height <= 0:
        raise ScenarioError("arena.width" if width <= 0 else "arena.height", "must be strictly positive")
    if epsilon <= 0:
        raise ScenarioError("signal.epsilon", "must be strictly positive")
    if "targets" in document and "targets_random" in document:
        raise ScenarioError("targets_random", "can not be combined with explicit targets")

    ## Lay out obstacles first, then targets:
    try:
        obstacles = _explicit_obstacles(document)
        targets = _explicit_targets(document)
        if "obstacles_random" in document:
            obstacles += _random_obstacles(reader, width, height, obstacles, targets, 2 * epsilon, seed)
        if "targets_random" in document:
            targets = _random_targets(reader, width, height, obstacles, 2 * epsilon, seed)
    except PackingError as exc:
        raise ScenarioError(f"{exc.what}_random", str(exc)) from exc

    ## Validate the environment:
    env = EnvironmentSpec(width, height, tuple(obstacles), tuple(targets), a, epsilon, population)
    problems = env.check()
    if problems:
        raise ScenarioError(*problems[0])

    ## Done, return the scenario:
    return Scenario(env, _params(reader, population, seed))


def read_scenario(path: Union[str, Path], overrides: Sequence[str] = ()) -> Scenario:
    """
    Reads and loads a scenario file.

    :raises OSError: If the file can not be read.
    :raises ScenarioError: If the document can not be parsed or is invalid.
    """
    return load_scenario(Path(path).read_text(encoding="utf-8"), overrides)
