"""Offline execution of build plans against an in-memory filesystem.

Nothing is downloaded and no interpreter runs: fetching reads from a fixture
registry and a git store on disk, and installing copies the fetched tree
into its environment and writes console-script launchers.  The resulting
:class:`Layout` can be verified, exported as a digest manifest, or written
to a real directory.

Fixture registry layout::

    registry/<py|js>/<name>/<version>/meta     requires/entrypoint lines
    registry/<py|js>/<name>/<version>/files/   package contents

Git store layout::

    gitstore/<url_key(url)>/<commit>/          checked-out tree
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import posixpath
import re
import sys
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import verspec
from .emitter import wrapper_text
from .errors import FetchMiss, IceforgeError, MergeConflict, SymlinkCollision, UnreadableTree
from .manifest import Environment, Manifest, Source, Violation, classify_tool
from .patchkit import PatchSet, Tree, apply_patchset
from .planner import BuildPlan, Step, StepKind, global_prefix, lockfile_path, wrapper_path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

INSTALL_RECORD = ".iceforge/INSTALLED"
GLOBAL_REQUIREMENTS_SOURCE = "global_requirements"


# ---------------------------------------------------------------------------
# fixture sources


@dataclass(frozen=True)
class PackageRecord:
    files: Mapping[str, bytes]
    requirements: tuple[str, ...] = ()
    entrypoints: tuple[tuple[str, str], ...] = ()


def parse_meta(text: str) -> tuple[tuple[str, ...], tuple[tuple[str, str], ...]]:
    """Parse ``requires: <req>`` and ``entrypoint: <cli> = <target>`` lines."""
    requires, entrypoints = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if not sep or not value:
            raise ValueError(f"meta line {lineno}: expected 'key: value'")
        if key == "requires":
            verspec.parse_requirement(value)
            requires.append(value)
        elif key == "entrypoint":
            cli, eq, target = value.partition("=")
            if not eq or not cli.strip() or not target.strip():
                raise ValueError(f"meta line {lineno}: expected 'entrypoint: <cli> = <target>'")
            entrypoints.append((cli.strip(), target.strip()))
        else:
            raise ValueError(f"meta line {lineno}: unknown key {key!r}")
    return tuple(requires), tuple(entrypoints)


def render_meta(requirements, entrypoints) -> str:
    lines = [f"requires: {r}" for r in requirements]
    lines += [f"entrypoint: {cli} = {target}" for cli, target in entrypoints]
    return "".join(line + "\n" for line in lines)


def load_tree(directory: str | Path) -> dict[str, bytes]:
    root = Path(directory)
    if not root.is_dir():
        raise UnreadableTree(f"{root}: not a directory")
    try:
        return {
            p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*"))
            if p.is_file()
        }
    except OSError as exc:
        raise UnreadableTree(f"{root}: {exc}") from exc


@dataclass
class RegistryIndex:
    packages: dict[tuple[str, str], dict[str, PackageRecord]] = field(default_factory=dict)

    def add(self, ecosystem: str, name: str, version: str, record: PackageRecord) -> None:
        verspec.parse_version(version)
        self.packages.setdefault((ecosystem, verspec.normalize_name(name)), {})[version] = record

    def record(self, ecosystem: str, name: str, version: str) -> PackageRecord:
        versions = self.packages.get((ecosystem, verspec.normalize_name(name)), {})
        wanted = verspec.parse_version(version)
        for text, rec in versions.items():
            if verspec.parse_version(text) == wanted:
                return rec
        raise FetchMiss(f"{ecosystem} package {name}=={version} is not in the registry")

    def versions(self, ecosystem: str = "py") -> dict[str, list[str]]:
        return {name: sorted(vs) for (eco, name), vs in sorted(self.packages.items()) if eco == ecosystem}


def load_registry(directory: str | Path) -> RegistryIndex:
    root = Path(directory)
    if not root.is_dir():
        raise UnreadableTree(f"{root}: registry directory does not exist")
    index = RegistryIndex()
    for eco_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for pkg_dir in sorted(p for p in eco_dir.iterdir() if p.is_dir()):
            for ver_dir in sorted(p for p in pkg_dir.iterdir() if p.is_dir()):
                meta = ver_dir / "meta"
                try:
                    requires, entrypoints = parse_meta(meta.read_text("utf-8")) if meta.exists() else ((), ())
                except (ValueError, OSError) as exc:
                    raise UnreadableTree(f"{meta}: {exc}") from exc
                files = load_tree(ver_dir / "files") if (ver_dir / "files").is_dir() else {}
                if not files:
                    raise UnreadableTree(f"{ver_dir}: package has no files/")
                index.add(eco_dir.name, pkg_dir.name, ver_dir.name, PackageRecord(files, requires, entrypoints))
    return index


def url_key(url: str) -> str:
    """Directory name for ``url`` in a git store."""
    return hashlib.sha256(url.encode("utf-8")).hexdigest()[:16]


class GitStore(Mapping):
    """Checked-out trees keyed by ``(url, commit)``."""

    def __init__(self, trees: Mapping[tuple[str, str], Tree] | None = None) -> None:
        self._trees: dict[tuple[str, str], Tree] = {}
        for (url, commit), tree in (trees or {}).items():
            self._trees[(url_key(url), commit)] = tree

    @classmethod
    def load(cls, directory: str | Path) -> GitStore:
        root = Path(directory)
        if not root.is_dir():
            raise UnreadableTree(f"{root}: git store directory does not exist")
        store = cls()
        for repo in sorted(p for p in root.iterdir() if p.is_dir()):
            for commit in sorted(p for p in repo.iterdir() if p.is_dir()):
                store._trees[(repo.name, commit.name)] = load_tree(commit)
        return store

    def _key(self, key: tuple[str, str]) -> tuple[str, str]:
        url, commit = key
        return url_key(url), commit

    def __getitem__(self, key: tuple[str, str]) -> Tree:
        return self._trees[self._key(key)]

    def __contains__(self, key: object) -> bool:
        return isinstance(key, tuple) and len(key) == 2 and self._key(key) in self._trees

    def __iter__(self):
        return iter(self._trees)

    def __len__(self) -> int:
        return len(self._trees)


def source_metadata(tree: Tree) -> tuple[tuple[str, ...], tuple[tuple[str, str], ...]]:
    """Dependencies and console scripts declared by a source tree's ``pyproject.toml``."""
    data = tree.get("pyproject.toml")
    if data is None:
        return (), ()
    try:
        project = tomllib.loads(data.decode("utf-8")).get("project", {})
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise FetchMiss(f"unreadable pyproject.toml: {exc}") from exc
    requires = tuple(project.get("dependencies", ()))
    scripts = tuple(sorted(project.get("scripts", {}).items()))
    return requires, scripts


def global_requirement_sets(
    m: Manifest, index: RegistryIndex, git_store: GitStore | None = None
) -> dict[str, list[verspec.Requirement]]:
    """Requirements every global-environment contributor brings to the merge.

    Git-sourced global tools contribute their ``pyproject.toml``
    dependencies when ``git_store`` is given and nothing otherwise.
    """
    sets: dict[str, list[verspec.Requirement]] = {}
    for spec in m.tools:
        if spec.environment is not Environment.GLOBAL:
            continue
        if spec.source is Source.GIT:
            if git_store is None:
                continue
            key = (spec.git_url, spec.git_commit)
            if key not in git_store:
                raise FetchMiss(f"{spec.git_url} at {spec.git_commit} is not in the git store")
            reqs = list(source_metadata(git_store[key])[0])
        else:
            reqs = list(index.record("py", spec.name, spec.version_pin).requirements)
            reqs.append(f"{spec.name}=={spec.version_pin}")
        sets[spec.name] = [verspec.parse_requirement(r) for r in reqs]
    if m.global_requirements:
        sets[GLOBAL_REQUIREMENTS_SOURCE] = [verspec.parse_requirement(r) for r in m.global_requirements]
    return sets


# ---------------------------------------------------------------------------
# log / layout


class Outcome(str, enum.Enum):
    OK = "OK"
    FAILED = "FAILED"


@dataclass(frozen=True)
class LogEntry:
    index: int
    kind: StepKind
    outcome: Outcome
    detail: str

    def __str__(self) -> str:
        return f"{self.index}. {self.kind.value} {self.outcome.value} {self.detail}"


@dataclass
class ActionLog:
    entries: list[LogEntry] = field(default_factory=list)

    def append(self, entry: LogEntry) -> None:
        self.entries.append(entry)

    @property
    def ok(self) -> bool:
        return all(e.outcome is Outcome.OK for e in self.entries)

    @property
    def failure(self) -> LogEntry | None:
        return next((e for e in self.entries if e.outcome is Outcome.FAILED), None)

    def kinds(self) -> list[StepKind]:
        return [e.kind for e in self.entries]

    def render(self) -> str:
        return "".join(f"{e}\n" for e in self.entries)


@dataclass
class Layout:
    layout_root: str
    root: dict[str, bytes] = field(default_factory=dict)
    global_env_packages: dict[str, verspec.Version] = field(default_factory=dict)
    # bin name -> absolute target path
    symlinks: dict[str, str] = field(default_factory=dict)

    def bin_link(self, name: str) -> str:
        return posixpath.join(self.layout_root, "bin", name)

    def export(self) -> str:
        """Sorted path manifest: file digests and symlink targets."""
        rows = [(path, f"{hashlib.sha256(data).hexdigest()}  {path}") for path, data in self.root.items()]
        rows += [(self.bin_link(name), f"symlink  {self.bin_link(name)} -> {target}")
                 for name, target in self.symlinks.items()]
        return "".join(line + "\n" for _, line in sorted(rows))

    def digest(self) -> str:
        return hashlib.sha256(self.export().encode("utf-8")).hexdigest()

    def materialize(self, directory: str | Path) -> None:
        """Write the layout below ``directory``, which stands in for the layout root."""
        out = Path(directory)
        for path, data in sorted(self.root.items()):
            dest = out / posixpath.relpath(path, self.layout_root)
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_bytes(data)
            if data.startswith(b"#!"):
                dest.chmod(0o755)
        for name, target in sorted(self.symlinks.items()):
            link = out / "bin" / name
            link.parent.mkdir(parents=True, exist_ok=True)
            real_target = out / posixpath.relpath(target, self.layout_root)
            if link.is_symlink() or link.exists():
                link.unlink()
            link.symlink_to(os.path.relpath(real_target, link.parent))


# ---------------------------------------------------------------------------
# execution


@dataclass(frozen=True)
class _Staged:
    tree: Mapping[str, bytes]
    requirements: tuple[str, ...]
    entrypoints: tuple[tuple[str, str], ...]
    package: str
    version: str | None = None
    commit: str | None = None


@dataclass
class _State:
    files: dict[str, bytes]
    symlinks: dict[str, str]
    pins: dict[str, verspec.Version]
    staged: dict[str, _Staged]
    # tool -> requirements contributed to the global merge
    global_contrib: dict[str, tuple[str, ...]]
    global_installed: dict[str, str]

    def clone(self) -> _State:
        return _State(dict(self.files), dict(self.symlinks), dict(self.pins), dict(self.staged),
                      dict(self.global_contrib), dict(self.global_installed))


def _join(*parts: str) -> str:
    return posixpath.join(*parts)


def _install_record(staged: _Staged, tool: str) -> bytes:
    lines = [f"name: {tool}", f"package: {staged.package}"]
    if staged.commit:
        lines.append(f"commit: {staged.commit}")
    else:
        lines.append(f"version: {staged.version}")
    lines += [f"requires: {r}" for r in staged.requirements]
    lines += [f"entrypoint: {cli} = {target}" for cli, target in staged.entrypoints]
    return ("\n".join(lines) + "\n").encode("utf-8")


def _read_record(data: bytes) -> dict[str, list[str]]:
    fields: dict[str, list[str]] = {}
    for line in data.decode("utf-8").splitlines():
        key, _, value = line.partition(":")
        fields.setdefault(key.strip(), []).append(value.strip())
    return fields


_SCRIPT_TARGET = re.compile(r"^([A-Za-z_][\w.]*):([A-Za-z_][\w.]*)$")


def _console_script(python: str, target: str) -> bytes:
    m = _SCRIPT_TARGET.match(target)
    if m is None:
        raise FetchMiss(f"bad console script target {target!r}")
    module, func = m.groups()
    return (
        f"#!{python}\n"
        "import sys\n"
        f"from {module} import {func.split('.')[0]}\n"
        "if __name__ == \"__main__\":\n"
        f"    sys.exit({func}())\n"
    ).encode("utf-8")


def _venv_files(prefix: str) -> dict[str, bytes]:
    return {
        _join(prefix, "pyvenv.cfg"): b"home = /usr/bin\ninclude-system-site-packages = false\n",
        _join(prefix, "bin", "python"): b'#!/bin/sh\nexec /usr/bin/python3 "$@"\n',
    }


def _install_python(state: _State, staged: _Staged, prefix: str, tool: str, record_path: str) -> str:
    site = _join(prefix, "lib", "site-packages")
    for path, data in staged.tree.items():
        state.files[_join(site, path)] = data
    python = _join(prefix, "bin", "python")
    for cli, target in staged.entrypoints:
        state.files[_join(prefix, "bin", cli)] = _console_script(python, target)
    state.files[record_path] = _install_record(staged, tool)
    return f"installed {len(staged.tree)} files and {len(staged.entrypoints)} scripts into {prefix}"


class _Executor:
    def __init__(self, plan, index, git_store, patches, scripts) -> None:
        self.plan = plan
        self.root = plan.layout_root
        self.index = index
        self.git_store = git_store
        self.patches = patches
        self.scripts = scripts

    def run(self) -> tuple[ActionLog, Layout]:
        log = ActionLog()
        state = _State({}, {}, {}, {}, {}, {})
        for i, step in enumerate(self.plan.steps, 1):
            work = state.clone()
            try:
                detail = getattr(self, "_" + step.kind.value.lower())(work, step)
            except IceforgeError as exc:
                log.append(LogEntry(i, step.kind, Outcome.FAILED, f"{type(exc).__name__}: {exc}"))
                break
            state = work
            log.append(LogEntry(i, step.kind, Outcome.OK, detail))
        return log, Layout(self.root, state.files, state.pins, state.symlinks)

    def _staged(self, state: _State, step: Step) -> _Staged:
        try:
            return state.staged.pop(step.tool)
        except KeyError:
            raise FetchMiss(f"{step.tool}: nothing fetched into {step['stage']}") from None

    def _create_isolated_env(self, state: _State, step: Step) -> str:
        state.files.update(_venv_files(step["env"]))
        return f"created {step['env']}"

    def _create_project_dir(self, state: _State, step: Step) -> str:
        state.files[_join(step["project"], "package.json")] = b'{\n  "private": true\n}\n'
        return f"created {step['project']}"

    def _fetch_index(self, state: _State, step: Step) -> str:
        eco, pkg, version = step["ecosystem"], step["package"], step["version"]
        rec = self.index.record(eco, pkg, version)
        state.staged[step.tool] = _Staged(rec.files, rec.requirements, rec.entrypoints, pkg, version=version)
        sep = "@" if eco == "js" else "=="
        return f"fetched {pkg}{sep}{version} ({len(rec.files)} files)"

    def _fetch_git(self, state: _State, step: Step) -> str:
        url, commit = step["url"], step["commit"]
        if (url, commit) not in self.git_store:
            raise FetchMiss(f"{url} at {commit} is not in the git store")
        tree = self.git_store[(url, commit)]
        requires, scripts = source_metadata(tree)
        state.staged[step.tool] = _Staged(tree, requires, scripts, step.tool, commit=commit)
        return f"cloned {url} at {commit} ({len(tree)} files)"

    def _apply_patches(self, state: _State, step: Step) -> str:
        ps: PatchSet | None = self.patches.get(step.tool)
        if ps is None or ps.is_empty:
            raise FetchMiss(f"{step.tool}: no patch set supplied for {step['patches']}")
        planned = [d for d in (step.get("diffs") or "").split(",") if d]
        if planned != [name for name, _ in ps.diffs]:
            raise FetchMiss(f"{step.tool}: supplied diffs differ from the plan")
        staged = self._staged(state, step)
        state.staged[step.tool] = replace(staged, tree=apply_patchset(staged.tree, ps))
        return f"applied {len(ps.overlays)} overlay files and {len(ps.diffs)} diffs"

    def _install_isolated(self, state: _State, step: Step) -> str:
        env = step["env"]
        if _join(env, "pyvenv.cfg") not in state.files:
            raise FetchMiss(f"{env}: environment was never created")
        staged = self._staged(state, step)
        return _install_python(state, staged, env, step.tool, _join(env, INSTALL_RECORD))

    def _install_global(self, state: _State, step: Step) -> str:
        prefix = step["prefix"]
        if _join(prefix, "pyvenv.cfg") not in state.files:
            state.files.update(_venv_files(prefix))
        staged = self._staged(state, step)
        contrib = list(staged.requirements)
        if staged.version is not None:
            contrib.append(f"{staged.package}=={staged.version}")
            state.global_installed[verspec.normalize_name(staged.package)] = staged.version
        state.global_contrib[step.tool] = tuple(contrib)
        return _install_python(state, staged, prefix, step.tool, _join(prefix, ".iceforge", step.tool))

    def _install_project(self, state: _State, step: Step) -> str:
        project = step["project"]
        manifest_path = _join(project, "package.json")
        if manifest_path not in state.files:
            raise FetchMiss(f"{project}: project directory was never created")
        staged = self._staged(state, step)
        pkg_dir = _join(project, "node_modules", staged.package)
        for path, data in staged.tree.items():
            state.files[_join(pkg_dir, path)] = data
        for cli, target in staged.entrypoints:
            shim = f'#!/bin/sh\nexec node "{_join(pkg_dir, target)}" "$@"\n'
            state.files[_join(project, "node_modules", ".bin", cli)] = shim.encode("utf-8")
        package_json = {"dependencies": {staged.package: staged.version}, "private": True}
        state.files[manifest_path] = (json.dumps(package_json, indent=2, sort_keys=True) + "\n").encode("utf-8")
        state.files[_join(project, INSTALL_RECORD)] = _install_record(staged, step.tool)
        return f"installed {len(staged.tree)} files into {pkg_dir}"

    def _install_global_requirements(self, state: _State, step: Step) -> str:
        req_sets = {
            tool: [verspec.parse_requirement(r) for r in reqs] for tool, reqs in state.global_contrib.items()
        }
        extra = [r for r in (step.get("requirements") or "").split(";") if r]
        if extra:
            req_sets[GLOBAL_REQUIREMENTS_SOURCE] = [verspec.parse_requirement(r) for r in extra]
        result = verspec.merge_global_requirements(req_sets, self.index.versions("py"))
        if not result.ok:
            raise MergeConflict(result)
        prefix = global_prefix(self.root)
        added = 0
        for name, version in sorted(result.pins.items()):
            installed = state.global_installed.get(name)
            if installed is not None and verspec.parse_version(installed) == version:
                continue
            rec = self.index.record("py", name, str(version))
            if _join(prefix, "pyvenv.cfg") not in state.files:
                state.files.update(_venv_files(prefix))
            staged = _Staged(rec.files, rec.requirements, rec.entrypoints, name, version=str(version))
            _install_python(state, staged, prefix, name, _join(prefix, ".iceforge", f"pkg-{name}"))
            state.global_installed[name] = str(version)
            added += 1
        state.pins = dict(result.pins)
        if result.pins:
            state.files[step["lockfile"]] = verspec.render_lockfile(result.pins).encode("utf-8")
        return f"pinned {len(result.pins)} packages ({added} installed from the lockfile)"

    def _write_wrapper(self, state: _State, step: Step) -> str:
        text = wrapper_text(step["environment"], step["home"], step["entry"])
        state.files[step["wrapper"]] = text.encode("utf-8")
        return f"wrote {step['wrapper']}"

    def _create_symlink(self, state: _State, step: Step) -> str:
        name = posixpath.basename(step["link"])
        if name in state.symlinks:
            raise SymlinkCollision(f"bin/{name} already links to {state.symlinks[name]}")
        script = step.get("script")
        if script:
            rel = script.removeprefix("cli_scripts/")
            if rel not in self.scripts:
                raise FetchMiss(f"custom script {script} was not supplied")
            state.files[step["target"]] = self.scripts[rel]
        state.symlinks[name] = step["target"]
        return f"linked bin/{name} -> {step['target']}"


def execute(
    plan: BuildPlan,
    index: RegistryIndex,
    git_store: Mapping[tuple[str, str], Tree],
    patches: Mapping[str, PatchSet] | None = None,
    scripts: Mapping[str, bytes] | None = None,
) -> tuple[ActionLog, Layout]:
    """Run ``plan`` step by step, stopping at the first failure.

    ``scripts`` maps ``<tool>/<name>`` to the bytes of custom CLI scripts.
    A failed step leaves no trace in the returned layout.
    """
    store = git_store if isinstance(git_store, GitStore) else GitStore(git_store)
    return _Executor(plan, index, store, patches or {}, scripts or {}).run()


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class VerificationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]


_EXEC_RE = re.compile(r'^exec "([^"]+)" "\$@"$', re.M)
_CD_EXEC_RE = re.compile(r'^cd "([^"]+)" && exec "\./([^"]+)" "\$@"$', re.M)


def _exec_target(text: str) -> str | None:
    m = _CD_EXEC_RE.search(text)
    if m:
        return posixpath.normpath(posixpath.join(m.group(1), m.group(2)))
    m = _EXEC_RE.search(text)
    return m.group(1) if m else None


def verify_layout(l: Layout, m: Manifest) -> VerificationReport:
    """Check links, wrappers, global-environment pins and install records."""
    out: list[Violation] = []
    root = l.layout_root

    for name, target in sorted(l.symlinks.items()):
        if target not in l.root:
            out.append(Violation("DanglingSymlink", None, f"bin/{name} -> {target} does not exist"))

    targets: dict[str, list[str]] = {}
    for name, target in l.symlinks.items():
        targets.setdefault(target, []).append(name)

    # each link is judged once, against every dynamic tool
    dynamic = [t for t in m.tools if not classify_tool(m, t.name).is_static]
    global_prefix_dir = global_prefix(root) + "/"
    for name, target in sorted(l.symlinks.items()):
        owner = next(
            (t.name for t in dynamic
             if name in {ep.cli_name for ep in t.entrypoints}
             or target.startswith(_join(root, "cli_scripts", t.name) + "/")),
            None,
        )
        if owner is not None or target.startswith(global_prefix_dir):
            out.append(Violation("UnexpectedSymlink", owner, f"bin/{name} exposes a dynamic tool"))

    for spec in m.tools:
        cls = classify_tool(m, spec.name)
        if spec.environment is Environment.PROJECT:
            record = _join(root, "projects", spec.name, INSTALL_RECORD)
        elif spec.environment is Environment.GLOBAL:
            record = _join(global_prefix(root), ".iceforge", spec.name)
        else:
            record = _join(root, "envs", spec.name, INSTALL_RECORD)
        if record not in l.root:
            out.append(Violation("MissingInstall", spec.name, f"no install record at {record}"))

        if not cls.is_static:
            continue

        for ep in spec.entrypoints:
            wrapper = wrapper_path(root, spec.name, ep.cli_name)
            linked = l.symlinks.get(ep.cli_name)
            if linked is None:
                out.append(Violation("MissingSymlink", spec.name, f"bin/{ep.cli_name} is missing"))
            elif linked != wrapper:
                out.append(Violation("WrongSymlinkTarget", spec.name, f"bin/{ep.cli_name} -> {linked}, expected {wrapper}"))
            elif len(targets.get(wrapper, ())) > 1:
                out.append(Violation("DuplicateSymlink", spec.name, f"{wrapper} is linked from {sorted(targets[wrapper])}"))
            if wrapper not in l.root:
                if linked is not None:
                    continue  # already reported as dangling
                out.append(Violation("MissingWrapper", spec.name, f"{wrapper} does not exist"))
                continue
            text = l.root[wrapper].decode("utf-8", "replace")
            target = _exec_target(text)
            if target is None or text.count("exec ") != 1:
                out.append(Violation("MalformedWrapper", spec.name, f"{wrapper} has no single exec line"))
            elif target not in l.root:
                out.append(Violation("MissingExecTarget", spec.name, f"{wrapper} execs missing {target}"))

    req_sets: dict[str, list[verspec.Requirement]] = {}
    for spec in m.python_tools:
        if spec.environment is not Environment.GLOBAL:
            continue
        data = l.root.get(_join(global_prefix(root), ".iceforge", spec.name))
        if data is None:
            continue
        fields = _read_record(data)
        reqs = [verspec.parse_requirement(r) for r in fields.get("requires", [])]
        if spec.source is Source.INDEX:
            reqs.append(verspec.parse_requirement(f"{spec.name}=={spec.version_pin}"))
        req_sets[spec.name] = reqs
    if m.global_requirements:
        req_sets[GLOBAL_REQUIREMENTS_SOURCE] = [verspec.parse_requirement(r) for r in m.global_requirements]
    for problem in verspec.check_pins(l.global_env_packages, req_sets):
        out.append(Violation("UnsatisfiedPin", None, problem))
    lock = l.root.get(lockfile_path(root), b"").decode("utf-8")
    if lock != verspec.render_lockfile(l.global_env_packages):
        out.append(Violation("LockfileMismatch", None, "global requirements file disagrees with the pinned packages"))

    return VerificationReport(tuple(out))
