"""Tool manifest: the four install lists plus global requirements.

A manifest file is a TOML-compatible subset::

    python_tools = ["garak==0.10.2", "easyedit"]
    nodejs_tools = ["promptfoo@0.107.0"]
    system_tools = ["pyrit"]
    git_tools = ["easyedit=https://github.com/zjunlp/EasyEdit#<40 hex>"]
    global_requirements = ["pyrit>=0.5"]

    [tool.easyedit]
    entrypoints = ["easyedit-python:bin/python"]

Python tools default to an isolated environment installed from the package
index; ``system_tools`` moves a tool into the shared global environment and
``git_tools`` switches its source to a pinned git commit.
"""

from __future__ import annotations

import enum
import re
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import NamedTuple

from . import verspec
from .errors import (
    DanglingOverride,
    DuplicateTool,
    MalformedCommit,
    ManifestSyntaxError,
    MissingPin,
    UnknownTool,
)

GRAMMAR_VERSION = "1"

NAME_RE = re.compile(r"^[a-z0-9_-]+$")
COMMIT_RE = re.compile(r"^[0-9a-f]{40}$")

LIST_KEYS = ("python_tools", "nodejs_tools", "system_tools", "git_tools", "global_requirements")


class Ecosystem(str, enum.Enum):
    PY = "py"
    JS = "js"


class Source(str, enum.Enum):
    INDEX = "index"
    GIT = "git"


class Environment(str, enum.Enum):
    ISOLATED = "isolated"
    GLOBAL = "global"
    PROJECT = "project"


class ToolClass(str, enum.Enum):
    STATIC_ISOLATED = "static-isolated"
    DYNAMIC_GLOBAL = "dynamic-global"
    STATIC_PROJECT = "static-project"

    @property
    def is_static(self) -> bool:
        return self is not ToolClass.DYNAMIC_GLOBAL


class Entrypoint(NamedTuple):
    cli_name: str
    entry: str

    def __str__(self) -> str:
        return f"{self.cli_name}:{self.entry}"


def default_entrypoints(name: str, ecosystem: Ecosystem) -> tuple[Entrypoint, ...]:
    if ecosystem is Ecosystem.JS:
        return (Entrypoint(name, f"node_modules/.bin/{name}"),)
    return (Entrypoint(name, f"bin/{name}"),)


@dataclass(frozen=True)
class ToolSpec:
    name: str
    ecosystem: Ecosystem
    source: Source
    environment: Environment
    version_pin: str | None = None
    git_url: str | None = None
    git_commit: str | None = None
    entrypoints: tuple[Entrypoint, ...] = ()

    @property
    def pin(self) -> str:
        """Version pin or commit hash, whichever defines this tool."""
        return self.git_commit if self.source is Source.GIT else self.version_pin


@dataclass(frozen=True)
class Manifest:
    python_tools: tuple[ToolSpec, ...] = ()
    nodejs_tools: tuple[ToolSpec, ...] = ()
    system_tools: tuple[str, ...] = ()
    git_tools: Mapping[str, tuple[str, str]] = field(default_factory=dict)
    global_requirements: tuple[str, ...] = ()

    @property
    def tools(self) -> tuple[ToolSpec, ...]:
        return self.python_tools + self.nodejs_tools

    def tool(self, name: str) -> ToolSpec:
        for spec in self.tools:
            if spec.name == name:
                return spec
        raise UnknownTool(f"no tool named {name!r} in manifest")


# ---------------------------------------------------------------------------
# tokenizer / parser


class _Token(NamedTuple):
    kind: str  # IDENT, STRING, LBRACK, RBRACK, COMMA, EQ, DOT, NEWLINE, EOF
    value: str
    line: int
    col: int


_PUNCT = {"[": "LBRACK", "]": "RBRACK", ",": "COMMA", "=": "EQ", ".": "DOT"}


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            tokens.append(_Token("NEWLINE", "\n", line, col))
            i, line, col = i + 1, line + 1, 1
        elif ch in " \t\r":
            i, col = i + 1, col + 1
        elif ch == "#":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in _PUNCT:
            tokens.append(_Token(_PUNCT[ch], ch, line, col))
            i, col = i + 1, col + 1
        elif ch == '"':
            start_col = col
            i, col = i + 1, col + 1
            buf = []
            while True:
                if i >= n or text[i] == "\n":
                    raise ManifestSyntaxError("unterminated string", line, start_col)
                c = text[i]
                if c == '"':
                    i, col = i + 1, col + 1
                    break
                if c == "\\":
                    nxt = text[i + 1] if i + 1 < n else ""
                    if nxt not in ('"', "\\"):
                        raise ManifestSyntaxError(f"unsupported escape '\\{nxt}'", line, col)
                    buf.append(nxt)
                    i, col = i + 2, col + 2
                    continue
                buf.append(c)
                i, col = i + 1, col + 1
            tokens.append(_Token("STRING", "".join(buf), line, start_col))
        elif ch.isalnum() or ch in "_-":
            start = i
            while i < n and (text[i].isalnum() or text[i] in "_-"):
                i += 1
            tokens.append(_Token("IDENT", text[start:i], line, col))
            col += i - start
        else:
            raise ManifestSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.next()
        if tok.kind != kind:
            raise ManifestSyntaxError(f"expected {kind.lower()}, found {tok.kind.lower()} {tok.value!r}", tok.line, tok.col)
        return tok

    def skip_newlines(self) -> None:
        while self.peek().kind == "NEWLINE":
            self.pos += 1

    def end_statement(self) -> None:
        tok = self.peek()
        if tok.kind == "EOF":
            return
        if tok.kind != "NEWLINE":
            raise ManifestSyntaxError(f"expected end of line, found {tok.value!r}", tok.line, tok.col)
        self.pos += 1

    def string_list(self) -> list[_Token]:
        self.expect("LBRACK")
        items: list[_Token] = []
        while True:
            self.skip_newlines()
            tok = self.peek()
            if tok.kind == "RBRACK":
                self.pos += 1
                return items
            items.append(self.expect("STRING"))
            self.skip_newlines()
            tok = self.next()
            if tok.kind == "RBRACK":
                return items
            if tok.kind != "COMMA":
                raise ManifestSyntaxError(f"expected ',' or ']', found {tok.value!r}", tok.line, tok.col)

    def document(self) -> tuple[dict[str, list[_Token]], dict[str, tuple[_Token, list[_Token]]]]:
        top: dict[str, list[_Token]] = {}
        tables: dict[str, tuple[_Token, list[_Token]]] = {}
        current: str | None = None
        current_keys: set[str] = set()
        while True:
            self.skip_newlines()
            tok = self.peek()
            if tok.kind == "EOF":
                return top, tables
            if tok.kind == "LBRACK":
                self.pos += 1
                head = self.expect("IDENT")
                if head.value != "tool":
                    raise ManifestSyntaxError(f"unknown table {head.value!r}", head.line, head.col)
                self.expect("DOT")
                name = self.expect("IDENT")
                self.expect("RBRACK")
                self.end_statement()
                if name.value in tables:
                    raise ManifestSyntaxError(f"duplicate table [tool.{name.value}]", name.line, name.col)
                tables[name.value] = (name, [])
                current, current_keys = name.value, set()
                continue
            key = self.expect("IDENT")
            self.expect("EQ")
            if current is None:
                if key.value not in LIST_KEYS:
                    raise ManifestSyntaxError(f"unknown key {key.value!r}", key.line, key.col)
                if key.value in top:
                    raise ManifestSyntaxError(f"duplicate key {key.value!r}", key.line, key.col)
                top[key.value] = self.string_list()
            else:
                if key.value != "entrypoints":
                    raise ManifestSyntaxError(f"unknown tool key {key.value!r}", key.line, key.col)
                if key.value in current_keys:
                    raise ManifestSyntaxError(f"duplicate key {key.value!r}", key.line, key.col)
                current_keys.add(key.value)
                tables[current] = (tables[current][0], self.string_list())
            self.end_statement()


def _name(tok: _Token, text: str) -> str:
    if not NAME_RE.match(text):
        raise ManifestSyntaxError(f"invalid tool name {text!r}", tok.line, tok.col)
    return text


def _version(tok: _Token, text: str) -> str:
    try:
        verspec.parse_version(text)
    except verspec.MalformedVersion as exc:
        raise ManifestSyntaxError(str(exc), tok.line, tok.col) from None
    return text


def parse_manifest(text: str) -> Manifest:
    """Parse manifest text and resolve the override lists into each ToolSpec."""
    top, tables = _Parser(text).document()

    seen: set[str] = set()

    def claim(tok: _Token, name: str) -> None:
        if name in seen:
            raise DuplicateTool(f"line {tok.line}: tool {name!r} listed more than once")
        seen.add(name)

    py_entries: list[tuple[_Token, str, str | None]] = []
    for tok in top.get("python_tools", []):
        name, sep, version = tok.value.partition("==")
        name = _name(tok, name.strip())
        claim(tok, name)
        py_entries.append((tok, name, _version(tok, version.strip()) if sep else None))

    js_entries: list[tuple[_Token, str, str | None]] = []
    for tok in top.get("nodejs_tools", []):
        name, sep, version = tok.value.partition("@")
        name = _name(tok, name.strip())
        claim(tok, name)
        js_entries.append((tok, name, _version(tok, version.strip()) if sep else None))

    py_names = {name for _, name, _ in py_entries}

    system: list[str] = []
    for tok in top.get("system_tools", []):
        name = _name(tok, tok.value.strip())
        if name not in py_names:
            raise DanglingOverride(f"line {tok.line}: system_tools names {name!r}, which is not in python_tools")
        if name not in system:
            system.append(name)

    git: dict[str, tuple[str, str]] = {}
    for tok in top.get("git_tools", []):
        m = re.match(r"^([^=#\s]+)=([^#\s]+)#(\S*)$", tok.value)
        if m is None:
            raise ManifestSyntaxError(f"git_tools entry must be 'name=url#commit', got {tok.value!r}", tok.line, tok.col)
        name = _name(tok, m.group(1))
        if name not in py_names:
            raise DanglingOverride(f"line {tok.line}: git_tools names {name!r}, which is not in python_tools")
        if name in git:
            raise DuplicateTool(f"line {tok.line}: git_tools lists {name!r} more than once")
        if not COMMIT_RE.match(m.group(3)):
            raise MalformedCommit(f"line {tok.line}: {m.group(3)!r} is not a 40-character lowercase hex commit")
        git[name] = (m.group(2), m.group(3))

    requirements = []
    for tok in top.get("global_requirements", []):
        try:
            verspec.parse_requirement(tok.value)
        except verspec.VersionError as exc:
            raise ManifestSyntaxError(str(exc), tok.line, tok.col) from None
        requirements.append(tok.value.strip())

    entrypoints: dict[str, tuple[Entrypoint, ...]] = {}
    for tname, (name_tok, items) in tables.items():
        if tname not in seen:
            raise DanglingOverride(f"line {name_tok.line}: [tool.{tname}] names an unknown tool")
        eps = []
        for tok in items:
            cli, sep, entry = tok.value.partition(":")
            if not sep or not entry or not NAME_RE.match(cli):
                raise ManifestSyntaxError(f"entrypoint must be 'cli_name:relative/path', got {tok.value!r}", tok.line, tok.col)
            if entry.startswith("/") or ".." in entry.split("/"):
                raise ManifestSyntaxError(f"entrypoint path must be relative: {entry!r}", tok.line, tok.col)
            eps.append(Entrypoint(cli, entry))
        entrypoints[tname] = tuple(eps)

    python_tools = []
    for tok, name, version in py_entries:
        if name in git:
            url, commit = git[name]
            source = Source.GIT
        else:
            if version is None:
                raise MissingPin(f"line {tok.line}: python tool {name!r} needs '=={{version}}' or a git_tools entry")
            url = commit = None
            source = Source.INDEX
        python_tools.append(
            ToolSpec(
                name=name,
                ecosystem=Ecosystem.PY,
                source=source,
                environment=Environment.GLOBAL if name in system else Environment.ISOLATED,
                version_pin=version,
                git_url=url,
                git_commit=commit,
                entrypoints=entrypoints.get(name, default_entrypoints(name, Ecosystem.PY)),
            )
        )

    nodejs_tools = []
    for tok, name, version in js_entries:
        if version is None:
            raise MissingPin(f"line {tok.line}: nodejs tool {name!r} needs '@{{version}}'")
        nodejs_tools.append(
            ToolSpec(
                name=name,
                ecosystem=Ecosystem.JS,
                source=Source.INDEX,
                environment=Environment.PROJECT,
                version_pin=version,
                entrypoints=entrypoints.get(name, default_entrypoints(name, Ecosystem.JS)),
            )
        )

    return Manifest(
        python_tools=tuple(python_tools),
        nodejs_tools=tuple(nodejs_tools),
        system_tools=tuple(system),
        git_tools=git,
        global_requirements=tuple(requirements),
    )


def _quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _render_list(key: str, values: list[str]) -> str:
    if not values:
        return f"{key} = []\n"
    body = "".join(f"    {_quote(v)},\n" for v in values)
    return f"{key} = [\n{body}]\n"


def render_manifest(m: Manifest) -> str:
    """Render ``m`` as canonical manifest text; ``parse_manifest`` inverts it."""
    py = [f"{t.name}=={t.version_pin}" if t.version_pin else t.name for t in m.python_tools]
    js = [f"{t.name}@{t.version_pin}" for t in m.nodejs_tools]
    git = [f"{name}={url}#{commit}" for name, (url, commit) in m.git_tools.items()]
    out = [
        _render_list("python_tools", py),
        _render_list("nodejs_tools", js),
        _render_list("system_tools", list(m.system_tools)),
        _render_list("git_tools", git),
        _render_list("global_requirements", list(m.global_requirements)),
    ]
    for t in m.tools:
        if t.entrypoints != default_entrypoints(t.name, t.ecosystem):
            out.append(f"\n[tool.{t.name}]\n" + _render_list("entrypoints", [str(e) for e in t.entrypoints]))
    return "".join(out)


# ---------------------------------------------------------------------------
# validation / classification


@dataclass(frozen=True)
class Violation:
    code: str
    tool: str | None
    message: str

    def __str__(self) -> str:
        where = f"{self.tool}: " if self.tool else ""
        return f"{self.code}: {where}{self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]


def validate_manifest(m: Manifest) -> ValidationReport:
    """Collect every invariant violation in ``m``; an empty report means buildable."""
    out: list[Violation] = []

    def add(code: str, tool: str | None, message: str) -> None:
        out.append(Violation(code, tool, message))

    names: list[str] = []
    for spec in m.tools:
        if spec.name in names:
            add("DuplicateTool", spec.name, "tool listed more than once")
        names.append(spec.name)
    py_names = {t.name for t in m.python_tools}
    js_names = {t.name for t in m.nodejs_tools}

    for spec in m.python_tools:
        if spec.ecosystem is not Ecosystem.PY:
            add("WrongEcosystem", spec.name, "python_tools entry is not a PY tool")
    for spec in m.nodejs_tools:
        if spec.ecosystem is not Ecosystem.JS:
            add("WrongEcosystem", spec.name, "nodejs_tools entry is not a JS tool")

    for spec in m.tools:
        if not NAME_RE.match(spec.name):
            add("InvalidName", spec.name, "name must match [a-z0-9_-]+")
        if spec.source is Source.INDEX:
            if spec.version_pin is None:
                add("MissingPin", spec.name, "index tool has no version pin")
            else:
                try:
                    verspec.parse_version(spec.version_pin)
                except verspec.MalformedVersion:
                    add("MalformedVersion", spec.name, f"unparseable pin {spec.version_pin!r}")
        else:
            if not spec.git_url:
                add("MissingGitUrl", spec.name, "git tool has no repository URL")
            if spec.git_commit is None or not COMMIT_RE.match(spec.git_commit):
                add("MalformedCommit", spec.name, f"{spec.git_commit!r} is not a 40-character lowercase hex commit")
        if spec.ecosystem is Ecosystem.JS and spec.environment is not Environment.PROJECT:
            add("EnvironmentMismatch", spec.name, "JS tools must install into a project directory")
        if spec.ecosystem is Ecosystem.PY and spec.environment is Environment.PROJECT:
            add("EnvironmentMismatch", spec.name, "PY tools install into an isolated or the global environment")
        if spec.ecosystem is Ecosystem.JS and spec.source is Source.GIT:
            add("EnvironmentMismatch", spec.name, "git sources are only supported for PY tools")
        clis = [e.cli_name for e in spec.entrypoints]
        for cli in sorted({c for c in clis if clis.count(c) > 1}):
            add("DuplicateCliName", spec.name, f"cli name {cli!r} declared twice")

    for name in m.system_tools:
        if name in js_names:
            add("SystemJsOverlap", name, "nodejs tools cannot be system tools")
        elif name not in py_names:
            add("DanglingOverride", name, "system_tools entry is not in python_tools")
    for name, (_, commit) in m.git_tools.items():
        if name not in py_names:
            add("DanglingOverride", name, "git_tools entry is not in python_tools")

    for spec in m.python_tools:
        wants_global = spec.name in m.system_tools
        if wants_global != (spec.environment is Environment.GLOBAL):
            add("OverrideMismatch", spec.name, "environment disagrees with system_tools")
        if (spec.name in m.git_tools) != (spec.source is Source.GIT):
            add("OverrideMismatch", spec.name, "source disagrees with git_tools")

    for req in m.global_requirements:
        try:
            verspec.parse_requirement(req)
        except verspec.VersionError as exc:
            add("MalformedRequirement", None, str(exc))

    owners: dict[str, list[str]] = {}
    for spec in m.tools:
        for cli in dict.fromkeys(e.cli_name for e in spec.entrypoints):
            owners.setdefault(cli, []).append(spec.name)
    for cli, tools in owners.items():
        if len(tools) > 1:
            add("CliNameCollision", None, f"cli name {cli!r} exposed by {', '.join(tools)}")

    return ValidationReport(tuple(out))


def classify_tool(m: Manifest, name: str) -> ToolClass:
    spec = m.tool(name)
    if name in m.system_tools:
        return ToolClass.DYNAMIC_GLOBAL
    if spec.ecosystem is Ecosystem.JS:
        return ToolClass.STATIC_PROJECT
    return ToolClass.STATIC_ISOLATED
