"""Version ordering, requirement specifiers and the global requirements merge.

The version grammar is a subset of PEP 440: a dotted numeric release,
an optional ``a``/``b``/``rc`` pre-release and an optional ``.postN``.
Epochs, dev releases and local labels are rejected.
"""

from __future__ import annotations

import enum
import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import total_ordering
from typing import NamedTuple

from .errors import MalformedRequirement, MalformedVersion, UnknownPackage

_VERSION_RE = re.compile(r"^(\d+(?:\.\d+)*)(?:(a|b|rc)(\d+))?(?:\.post(\d+))?$")
_NAME_RE = re.compile(r"^[A-Za-z0-9](?:[A-Za-z0-9._-]*[A-Za-z0-9])?$")
_SPEC_RE = re.compile(r"^\s*(~=|==|!=|>=|<=|>|<)\s*(\S+?)\s*$")

PRE_PHASES = ("a", "b", "rc")
OPERATORS = ("~=", "==", "!=", ">=", "<=", ">", "<")


class Ordering(enum.IntEnum):
    LT = -1
    EQ = 0
    GT = 1


@total_ordering
@dataclass(frozen=True, eq=False)
class Version:
    release: tuple[int, ...]
    pre: tuple[str, int] | None = None
    post: int | None = None
    _key: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.release or any(n < 0 for n in self.release):
            raise MalformedVersion(f"bad release segments {self.release!r}")
        if self.pre is not None and self.pre[0] not in PRE_PHASES:
            raise MalformedVersion(f"bad pre-release phase {self.pre[0]!r}")
        release = list(self.release)
        while len(release) > 1 and release[-1] == 0:
            release.pop()
        # a final release sorts after all of its pre-releases
        pre = (PRE_PHASES.index(self.pre[0]), self.pre[1]) if self.pre else (len(PRE_PHASES), 0)
        post = -1 if self.post is None else self.post
        object.__setattr__(self, "_key", (tuple(release), pre, post))

    @classmethod
    def parse(cls, text: str) -> Version:
        return parse_version(text)

    def __str__(self) -> str:
        out = ".".join(str(n) for n in self.release)
        if self.pre:
            out += f"{self.pre[0]}{self.pre[1]}"
        if self.post is not None:
            out += f".post{self.post}"
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Version):
            return NotImplemented
        return self._key == other._key

    def __lt__(self, other: Version) -> bool:
        if not isinstance(other, Version):
            return NotImplemented
        return self._key < other._key

    def __hash__(self) -> int:
        return hash(self._key)


def parse_version(text: str) -> Version:
    m = _VERSION_RE.match(text.strip()) if isinstance(text, str) else None
    if m is None:
        raise MalformedVersion(f"malformed version {text!r}")
    release = tuple(int(part) for part in m.group(1).split("."))
    pre = (m.group(2), int(m.group(3))) if m.group(2) else None
    post = int(m.group(4)) if m.group(4) is not None else None
    return Version(release, pre, post)


def compare_versions(a: Version, b: Version) -> Ordering:
    if a._key < b._key:
        return Ordering.LT
    if a._key > b._key:
        return Ordering.GT
    return Ordering.EQ


def normalize_name(name: str) -> str:
    return re.sub(r"[-_.]+", "-", name).lower()


class Specifier(NamedTuple):
    op: str
    version: Version

    def __str__(self) -> str:
        return f"{self.op}{self.version}"

    def contains(self, v: Version) -> bool:
        op, target = self.op, self.version
        if op == "==":
            return v == target
        if op == "!=":
            return v != target
        if op == ">=":
            return v >= target
        if op == "<=":
            return v <= target
        if op == ">":
            return v > target
        if op == "<":
            return v < target
        # ~=X.Y.Z: >= X.Y.Z and the release prefix X.Y must match
        prefix = target.release[:-1]
        padded = v.release + (0,) * max(0, len(prefix) - len(v.release))
        return v >= target and padded[: len(prefix)] == prefix


def _spec_sort_key(spec: Specifier) -> tuple:
    return (OPERATORS.index(spec.op), spec.version._key)


@dataclass(frozen=True)
class Requirement:
    name: str
    specifiers: frozenset[Specifier] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "name", normalize_name(self.name))
        object.__setattr__(self, "specifiers", frozenset(self.specifiers))

    def __str__(self) -> str:
        return self.name + self.specifier_text

    @property
    def specifier_text(self) -> str:
        return ",".join(str(s) for s in sorted(self.specifiers, key=_spec_sort_key))


def parse_requirement(text: str) -> Requirement:
    text = text.strip()
    m = re.match(r"^([A-Za-z0-9][A-Za-z0-9._-]*)(.*)$", text)
    if m is None or not _NAME_RE.match(m.group(1)):
        raise MalformedRequirement(f"malformed requirement {text!r}")
    name, rest = m.group(1), m.group(2).strip()
    specs = []
    if rest:
        for chunk in rest.split(","):
            sm = _SPEC_RE.match(chunk)
            if sm is None:
                raise MalformedRequirement(f"malformed specifier {chunk.strip()!r} in {text!r}")
            version = parse_version(sm.group(2))
            if sm.group(1) == "~=" and len(version.release) < 2:
                raise MalformedRequirement(f"'~=' needs at least two release segments in {text!r}")
            specs.append(Specifier(sm.group(1), version))
    return Requirement(name, frozenset(specs))


def parse_requirements_text(text: str) -> list[Requirement]:
    """Parse a requirements file body, skipping blank lines and ``#`` comments."""
    reqs = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            reqs.append(parse_requirement(line))
    return reqs


def satisfies(v: Version, r: Requirement) -> bool:
    return all(spec.contains(v) for spec in r.specifiers)


class MergeStatus(str, enum.Enum):
    OK = "OK"
    CONFLICT = "CONFLICT"


class Conflict(NamedTuple):
    package: str
    # (tool, specifier text) for every tool constraining the package
    contributors: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class MergeResult:
    status: MergeStatus
    pins: Mapping[str, Version] = field(default_factory=dict)
    conflicts: tuple[Conflict, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status is MergeStatus.OK

    def render(self) -> str:
        if self.ok:
            return render_lockfile(self.pins)
        lines = []
        for c in self.conflicts:
            who = "; ".join(f"{tool} {spec or '(any)'}" for tool, spec in c.contributors)
            lines.append(f"CONFLICT {c.package}: {who}\n")
        return "".join(lines)


def merge_global_requirements(
    req_sets: Mapping[str, Iterable[Requirement]],
    index: Mapping[str, Iterable[Version | str]],
) -> MergeResult:
    """Pin every referenced package to its highest available version that
    satisfies all contributing requirements, or report each package for
    which no such version exists.

    Only direct requirements are merged; there is no transitive resolution.
    """
    available: dict[str, list[Version]] = {}
    for name, versions in index.items():
        available.setdefault(normalize_name(name), []).extend(
            v if isinstance(v, Version) else parse_version(v) for v in versions
        )

    by_package: dict[str, list[tuple[str, Requirement]]] = {}
    for tool in sorted(req_sets):
        for req in req_sets[tool]:
            by_package.setdefault(req.name, []).append((tool, req))

    pins: dict[str, Version] = {}
    conflicts: list[Conflict] = []
    for package in sorted(by_package):
        if package not in available:
            raise UnknownPackage(f"package {package!r} is not in the index")
        contributions = by_package[package]
        candidates = [
            v for v in available[package] if all(satisfies(v, req) for _, req in contributions)
        ]
        if candidates:
            pins[package] = max(candidates)
        else:
            conflicts.append(
                Conflict(package, tuple((tool, req.specifier_text) for tool, req in contributions))
            )
    if conflicts:
        return MergeResult(MergeStatus.CONFLICT, {}, tuple(conflicts))
    return MergeResult(MergeStatus.OK, pins, ())


def render_lockfile(pins: Mapping[str, Version]) -> str:
    return "".join(f"{name}=={pins[name]}\n" for name in sorted(pins))


def check_pins(
    pins: Mapping[str, Version], req_sets: Mapping[str, Iterable[Requirement]]
) -> list[str]:
    """Return one message per requirement the pinned set fails to satisfy."""
    problems = []
    for tool in sorted(req_sets):
        for req in req_sets[tool]:
            pinned = pins.get(req.name)
            if pinned is None:
                problems.append(f"{tool}: {req} has no pin")
            elif not satisfies(pinned, req):
                problems.append(f"{tool}: {req.name}=={pinned} violates {req}")
    return problems
