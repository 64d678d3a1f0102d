"""Render build plans as a container build file or a shell script, and
render the launcher scripts for static tools."""

from __future__ import annotations

import posixpath
import shlex

from . import __version__
from .errors import NotStatic
from .manifest import Entrypoint, Environment, ToolSpec
from .planner import BuildPlan, Step, StepKind, default_root, env_path, global_prefix, project_path

DEFAULT_BASE_IMAGE = "iceforge-base:placeholder"

q = shlex.quote

_PACKAGE_JSON = '{"private": true}'


def wrapper_text(environment: str, home: str, entry: str) -> str:
    if environment == Environment.PROJECT.value:
        return f'#!/bin/sh\ncd "{home}" && exec "./{entry}" "$@"\n'
    if environment == Environment.ISOLATED.value:
        return f'#!/bin/sh\nexec "{posixpath.join(home, entry)}" "$@"\n'
    raise NotStatic(f"no wrapper for tools in the {environment} environment")


def render_wrapper(tool: ToolSpec, entrypoint: Entrypoint, layout_root: str | None = None) -> str:
    """Two-line ``/bin/sh`` launcher that execs ``entrypoint`` inside the tool's environment."""
    root = layout_root or default_root()
    if tool.environment is Environment.GLOBAL:
        raise NotStatic(f"{tool.name} installs into the global environment and gets no wrapper")
    home = project_path(root, tool.name) if tool.environment is Environment.PROJECT else env_path(root, tool.name)
    return wrapper_text(tool.environment.value, home, entrypoint.entry)


def _download_dir(root: str, tool: str) -> str:
    return posixpath.join(root, "build", ".downloads", tool)


def _commands(step: Step, root: str) -> tuple[list[tuple[str, str]], list[str]]:
    """Return (copies from the build context, shell commands) for one step."""
    k = step.kind
    copies: list[tuple[str, str]] = []
    if k is StepKind.CREATE_ISOLATED_ENV:
        cmds = [f"python3 -m venv {q(step['env'])}"]
    elif k is StepKind.CREATE_PROJECT_DIR:
        project = step["project"]
        cmds = [f"mkdir -p {q(project)}",
                f"printf '%s\\n' {q(_PACKAGE_JSON)} > {q(project + '/package.json')}"]
    elif k is StepKind.FETCH_INDEX:
        stage, dl = step["stage"], _download_dir(root, step.tool)
        pkg = step["package"]
        if step["ecosystem"] == "js":
            fetch = f"npm pack {q(pkg + '@' + step['version'])} --pack-destination {q(dl)}"
            archive = f"{q(dl)}/*.tgz"
        else:
            fetch = (f"python3 -m pip download --no-deps --no-binary=:all: "
                     f"--dest {q(dl)} {q(pkg + '==' + step['version'])}")
            archive = f"{q(dl)}/*.tar.gz"
        cmds = [f"mkdir -p {q(dl)} {q(stage)}", fetch,
                f"tar -xzf {archive} -C {q(stage)} --strip-components=1"]
    elif k is StepKind.FETCH_GIT:
        stage = step["stage"]
        cmds = [f"git clone --quiet --no-checkout {q(step['url'])} {q(stage)}",
                f"git -C {q(stage)} checkout --quiet --detach {step['commit']}"]
    elif k is StepKind.APPLY_PATCHES:
        stage = step["stage"]
        staged = posixpath.join(root, step["patches"])
        copies.append((step["patches"] + "/", staged + "/"))
        cmds = []
        if step.get("overlays"):
            cmds.append(f"cp -R {q(staged + '/overlay')}/. {q(stage)}/")
        for diff in (step.get("diffs") or "").split(","):
            if diff:
                cmds.append(f"patch -d {q(stage)} -p1 --fuzz=0 --batch --forward "
                            f"< {q(posixpath.join(staged, diff))}")
    elif k is StepKind.INSTALL_ISOLATED:
        cmds = [f"{q(step['env'] + '/bin/python')} -m pip install --no-cache-dir {q(step['stage'])}"]
    elif k is StepKind.INSTALL_GLOBAL:
        cmds = [f"{q(step['prefix'] + '/bin/python')} -m pip install --no-cache-dir {q(step['stage'])}"]
    elif k is StepKind.INSTALL_PROJECT:
        cmds = [f"npm install --prefix {q(step['project'])} --no-audit --no-fund "
                f"--install-links {q(step['stage'])}"]
    elif k is StepKind.INSTALL_GLOBAL_REQUIREMENTS:
        lock = step["lockfile"]
        reqs = [r for r in (step.get("requirements") or "").split(";") if r]
        if reqs:
            cmds = [f"printf '%s\\n' {' '.join(q(r) for r in reqs)} > {q(lock)}",
                    f"{q(global_prefix(root) + '/bin/python')} -m pip install --no-cache-dir -r {q(lock)}"]
        else:
            cmds = [f": > {q(lock)}"]
    elif k is StepKind.WRITE_WRAPPER:
        wrapper = step["wrapper"]
        lines = wrapper_text(step["environment"], step["home"], step["entry"]).splitlines()
        cmds = [f"mkdir -p {q(posixpath.dirname(wrapper))}",
                f"printf '%s\\n' {' '.join(q(line) for line in lines)} > {q(wrapper)}",
                f"chmod 0755 {q(wrapper)}"]
    elif k is StepKind.CREATE_SYMLINK:
        link, target = step["link"], step["target"]
        cmds = []
        if step.get("script"):
            copies.append((step["script"], target))
            cmds.append(f"chmod 0755 {q(target)}")
        cmds += [f"mkdir -p {q(posixpath.dirname(link))}", f"ln -s {q(target)} {q(link)}"]
    else:  # pragma: no cover - exhaustive over StepKind
        raise ValueError(k)
    return copies, cmds


def _block_title(i: int, total: int, step: Step) -> str:
    who = f" {step.tool}" if step.tool else ""
    return f"# step {i}/{total}: {step.kind.value}{who}"


def emit_buildfile(p: BuildPlan, base_image: str = DEFAULT_BASE_IMAGE) -> str:
    root = p.layout_root
    out = [
        "# syntax=docker/dockerfile:1\n",
        f"# Generated by iceforge {__version__} from a tool manifest. Do not edit.\n",
        f"ARG BASE_IMAGE={base_image}\n",
        "FROM ${BASE_IMAGE}\n",
        'SHELL ["/bin/sh", "-eu", "-c"]\n',
        f"RUN python3 -m venv {q(global_prefix(root))}\n",
        f"ENV PATH={root}/bin:{global_prefix(root)}/bin:$PATH\n",
    ]
    total = len(p.steps)
    for i, step in enumerate(p.steps, 1):
        copies, cmds = _commands(step, root)
        out.append("\n" + _block_title(i, total, step) + "\n")
        for src, dest in copies:
            out.append(f"COPY {src} {dest}\n")
        out.append("RUN " + " && \\\n    ".join(cmds) + "\n")
    return "".join(out)


def emit_shell(p: BuildPlan) -> str:
    root = p.layout_root
    out = [
        "#!/usr/bin/env bash\n",
        f"# Generated by iceforge {__version__} from a tool manifest. Do not edit.\n",
        "# Run from the build context (the directory holding patches/ and cli_scripts/).\n",
        "set -euo pipefail\n",
        'ICEFORGE_CONTEXT="${ICEFORGE_CONTEXT:-$(pwd)}"\n',
        f"python3 -m venv {q(global_prefix(root))}\n",
        f'export PATH="{root}/bin:{global_prefix(root)}/bin:$PATH"\n',
    ]
    total = len(p.steps)
    for i, step in enumerate(p.steps, 1):
        copies, cmds = _commands(step, root)
        out.append("\n" + _block_title(i, total, step) + "\n{\n")
        for src, dest in copies:
            if src.endswith("/"):
                out.append(f'  mkdir -p {q(dest)}\n  cp -R "$ICEFORGE_CONTEXT"/{q(src)}. {q(dest)}\n')
            else:
                out.append(f'  mkdir -p {q(posixpath.dirname(dest))}\n  cp "$ICEFORGE_CONTEXT"/{q(src)} {q(dest)}\n')
        for cmd in cmds:
            out.append(f"  {cmd}\n")
        out.append("}\n")
    return "".join(out)
