"""Turn a manifest and its patch sets into an ordered build plan.

Per tool the plan follows the install flow: create the environment or
project directory, fetch the source, apply patches, install.  One global
requirements step follows the per-tool loop; wrapper and symlink steps for
static tools come last.

Layout below the plan root::

    envs/<tool>/            isolated Python environments
    projects/<tool>/        Node.js project directories
    global/                 shared (system) Python environment
    build/<tool>/           fetched and patched source trees
    cli_scripts/<tool>/     generated wrappers and custom scripts
    bin/                    one symlink per CLI name
"""

from __future__ import annotations

import enum
import os
import posixpath
import shlex
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

from .errors import CliNameCollision, InvalidManifest, UnreadableTree
from .manifest import Environment, Manifest, Source, ToolSpec, classify_tool, validate_manifest
from .patchkit import PatchSet

DEFAULT_ROOT = "/opt/iceforge"
ROOT_ENV_VAR = "ICEFORGE_ROOT"


def default_root() -> str:
    return os.environ.get(ROOT_ENV_VAR) or DEFAULT_ROOT


class StepKind(str, enum.Enum):
    CREATE_ISOLATED_ENV = "CREATE_ISOLATED_ENV"
    CREATE_PROJECT_DIR = "CREATE_PROJECT_DIR"
    FETCH_INDEX = "FETCH_INDEX"
    FETCH_GIT = "FETCH_GIT"
    APPLY_PATCHES = "APPLY_PATCHES"
    INSTALL_ISOLATED = "INSTALL_ISOLATED"
    INSTALL_GLOBAL = "INSTALL_GLOBAL"
    INSTALL_PROJECT = "INSTALL_PROJECT"
    INSTALL_GLOBAL_REQUIREMENTS = "INSTALL_GLOBAL_REQUIREMENTS"
    WRITE_WRAPPER = "WRITE_WRAPPER"
    CREATE_SYMLINK = "CREATE_SYMLINK"


REQUIRED_PARAMS = {
    StepKind.CREATE_ISOLATED_ENV: ("env",),
    StepKind.CREATE_PROJECT_DIR: ("project",),
    StepKind.FETCH_INDEX: ("ecosystem", "package", "version", "stage"),
    StepKind.FETCH_GIT: ("url", "commit", "stage"),
    StepKind.APPLY_PATCHES: ("stage", "patches"),
    StepKind.INSTALL_ISOLATED: ("env", "stage"),
    StepKind.INSTALL_GLOBAL: ("prefix", "stage"),
    StepKind.INSTALL_PROJECT: ("project", "stage"),
    StepKind.INSTALL_GLOBAL_REQUIREMENTS: ("lockfile",),
    StepKind.WRITE_WRAPPER: ("cli", "environment", "home", "entry", "wrapper"),
    StepKind.CREATE_SYMLINK: ("link", "target"),
}


@dataclass(frozen=True)
class Step:
    kind: StepKind
    tool: str | None
    params: tuple[tuple[str, str], ...] = ()

    def __getitem__(self, key: str) -> str:
        for k, v in self.params:
            if k == key:
                return v
        raise KeyError(key)

    def get(self, key: str, default: str | None = None) -> str | None:
        try:
            return self[key]
        except KeyError:
            return default

    def serialize(self) -> str:
        parts = [self.kind.value]
        if self.tool is not None:
            parts.append(f"tool={self.tool}")
        parts.extend(f"{k}={shlex.quote(v)}" for k, v in self.params)
        return " ".join(parts)


@dataclass(frozen=True)
class BuildPlan:
    steps: tuple[Step, ...]
    layout_root: str = DEFAULT_ROOT

    def serialize(self) -> str:
        return "".join(f"{i}. {step.serialize()}\n" for i, step in enumerate(self.steps, 1))

    def count(self, kind: StepKind) -> int:
        return sum(1 for s in self.steps if s.kind is kind)

    def for_tool(self, tool: str) -> list[Step]:
        return [s for s in self.steps if s.tool == tool]


def env_path(root: str, tool: str) -> str:
    return posixpath.join(root, "envs", tool)


def project_path(root: str, tool: str) -> str:
    return posixpath.join(root, "projects", tool)


def global_prefix(root: str) -> str:
    return posixpath.join(root, "global")


def stage_path(root: str, tool: str) -> str:
    return posixpath.join(root, "build", tool)


def wrapper_path(root: str, tool: str, cli: str) -> str:
    return posixpath.join(root, "cli_scripts", tool, cli)


def bin_path(root: str, cli: str) -> str:
    return posixpath.join(root, "bin", cli)


def lockfile_path(root: str) -> str:
    return posixpath.join(root, "global_requirements.txt")


def _tool_steps(spec: ToolSpec, patches: PatchSet | None, root: str) -> list[Step]:
    name = spec.name
    stage = stage_path(root, name)
    steps: list[Step] = []
    if spec.environment is Environment.ISOLATED:
        steps.append(Step(StepKind.CREATE_ISOLATED_ENV, name, (("env", env_path(root, name)),)))
    elif spec.environment is Environment.PROJECT:
        steps.append(Step(StepKind.CREATE_PROJECT_DIR, name, (("project", project_path(root, name)),)))

    if spec.source is Source.GIT:
        steps.append(Step(StepKind.FETCH_GIT, name,
                          (("url", spec.git_url), ("commit", spec.git_commit), ("stage", stage))))
    else:
        steps.append(Step(StepKind.FETCH_INDEX, name,
                          (("ecosystem", spec.ecosystem.value), ("package", name),
                           ("version", spec.version_pin), ("stage", stage))))

    if patches is not None and not patches.is_empty:
        params = [("stage", stage), ("patches", f"patches/{name}")]
        if patches.overlays:
            params.append(("overlays", ",".join(path for path, _ in patches.overlays)))
        if patches.diffs:
            params.append(("diffs", ",".join(fname for fname, _ in patches.diffs)))
        steps.append(Step(StepKind.APPLY_PATCHES, name, tuple(params)))

    if spec.environment is Environment.ISOLATED:
        steps.append(Step(StepKind.INSTALL_ISOLATED, name, (("env", env_path(root, name)), ("stage", stage))))
    elif spec.environment is Environment.GLOBAL:
        steps.append(Step(StepKind.INSTALL_GLOBAL, name, (("prefix", global_prefix(root)), ("stage", stage))))
    else:
        steps.append(Step(StepKind.INSTALL_PROJECT, name,
                          (("project", project_path(root, name)), ("stage", stage))))
    return steps


def _entry_steps(spec: ToolSpec, root: str) -> list[Step]:
    home = project_path(root, spec.name) if spec.environment is Environment.PROJECT else env_path(root, spec.name)
    steps = []
    for ep in spec.entrypoints:
        wrapper = wrapper_path(root, spec.name, ep.cli_name)
        steps.append(Step(StepKind.WRITE_WRAPPER, spec.name,
                          (("cli", ep.cli_name), ("environment", spec.environment.value),
                           ("home", home), ("entry", ep.entry), ("wrapper", wrapper))))
        steps.append(Step(StepKind.CREATE_SYMLINK, spec.name,
                          (("link", bin_path(root, ep.cli_name)), ("target", wrapper))))
    return steps


def plan_build(
    m: Manifest,
    patches: Mapping[str, PatchSet] | None = None,
    *,
    layout_root: str | None = None,
    custom_scripts: list[Step] | tuple[Step, ...] = (),
) -> BuildPlan:
    """Plan the build of every manifest tool, python_tools first.

    ``custom_scripts`` are symlink steps from :func:`plan_custom_scripts`;
    they are appended after the manifest's own symlinks.
    """
    report = validate_manifest(m)
    if not report.ok:
        raise InvalidManifest(report.violations)
    root = layout_root or default_root()
    patches = patches or {}

    steps: list[Step] = []
    for spec in m.tools:
        steps.extend(_tool_steps(spec, patches.get(spec.name), root))

    params = [("lockfile", lockfile_path(root))]
    if m.global_requirements:
        params.append(("requirements", ";".join(m.global_requirements)))
    steps.append(Step(StepKind.INSTALL_GLOBAL_REQUIREMENTS, None, tuple(params)))

    for spec in m.tools:
        if classify_tool(m, spec.name).is_static:
            steps.extend(_entry_steps(spec, root))
    steps.extend(custom_scripts)
    return BuildPlan(tuple(steps), root)


def discover_custom_scripts(script_root: str | Path) -> list[tuple[str, str]]:
    """Return ``(tool, name)`` for every ``<script_root>/<tool>/<name>`` file."""
    root = Path(script_root)
    if not root.is_dir():
        raise UnreadableTree(f"{root}: script directory does not exist")
    found = []
    for tool_dir in root.iterdir():
        if tool_dir.is_dir():
            found.extend((tool_dir.name, p.name) for p in tool_dir.iterdir() if p.is_file())
    return sorted(found)


def plan_custom_scripts(
    script_root: str | Path,
    m: Manifest | None = None,
    *,
    layout_root: str | None = None,
) -> list[Step]:
    """One symlink step per self-contained script under ``cli_scripts/<tool>/``."""
    root = layout_root or default_root()
    taken: dict[str, str] = {}
    if m is not None:
        for spec in m.tools:
            for ep in spec.entrypoints:
                taken.setdefault(ep.cli_name, f"manifest tool {spec.name!r}")
    steps = []
    for tool, name in discover_custom_scripts(script_root):
        if name in taken:
            raise CliNameCollision(f"custom script {tool}/{name} collides with {taken[name]}")
        taken[name] = f"custom script {tool}/{name}"
        steps.append(Step(StepKind.CREATE_SYMLINK, tool,
                          (("link", bin_path(root, name)),
                           ("target", wrapper_path(root, tool, name)),
                           ("script", f"cli_scripts/{tool}/{name}"))))
    return steps
