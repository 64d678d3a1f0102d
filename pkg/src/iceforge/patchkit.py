"""Unified diff parsing and zero-fuzz application over in-memory file trees.

A file tree is a mapping of relative POSIX paths to file contents (bytes).
Patches for a tool live under ``patches/<tool>/``: ``*.diff`` files are
applied in lexicographic filename order, after every file below
``overlay/`` has been copied into the source tree.
"""

from __future__ import annotations

import difflib
import re
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

from .errors import (
    ContextMismatch,
    HunkCountMismatch,
    MalformedDiff,
    TargetExists,
    TargetMissing,
    UnreadableTree,
)

Tree = Mapping[str, bytes]

DEV_NULL = "/dev/null"
CONTEXT, DELETE, ADD = "context", "delete", "add"
NO_NEWLINE = "\\ No newline at end of file"

_HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")
_TAGS = {" ": CONTEXT, "-": DELETE, "+": ADD}
_PREFIX = {CONTEXT: " ", DELETE: "-", ADD: "+"}


class HunkLine(NamedTuple):
    tag: str
    # includes the line terminator unless the file ends without one
    text: str


@dataclass(frozen=True)
class Hunk:
    old_start: int
    old_len: int
    new_start: int
    new_len: int
    lines: tuple[HunkLine, ...]

    @property
    def old_begin(self) -> int:
        """0-based index of the first old line the hunk covers."""
        return self.old_start - 1 if self.old_len else self.old_start


@dataclass(frozen=True)
class FilePatch:
    old_path: str
    new_path: str
    hunks: tuple[Hunk, ...] = ()

    @property
    def path(self) -> str:
        return self.old_path if self.new_path == DEV_NULL else self.new_path


@dataclass(frozen=True)
class Patch:
    file_patches: tuple[FilePatch, ...] = ()


@dataclass(frozen=True)
class PatchSet:
    tool: str
    overlays: tuple[tuple[str, bytes], ...] = ()
    diffs: tuple[tuple[str, Patch], ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.overlays and not self.diffs


def split_lines(text: str) -> list[str]:
    """Split on ``\\n`` only, keeping terminators (``\\r`` stays part of the line)."""
    lines = text.split("\n")
    out = [line + "\n" for line in lines[:-1]]
    if lines[-1]:
        out.append(lines[-1])
    return out


def _decode(data: bytes) -> str:
    return data.decode("utf-8", "surrogateescape")


def _encode(text: str) -> bytes:
    return text.encode("utf-8", "surrogateescape")


def _header_path(line: str) -> str:
    path = line[4:].rstrip("\r\n").split("\t", 1)[0].strip()
    if len(path) >= 2 and path[0] == path[-1] == '"':
        path = path[1:-1]
    return path


def _strip_prefixes(old: str, new: str) -> tuple[str, str]:
    old_ok = old == DEV_NULL or old.startswith("a/")
    new_ok = new == DEV_NULL or new.startswith("b/")
    if old_ok and new_ok and not (old == new == DEV_NULL):
        old = old if old == DEV_NULL else old[2:]
        new = new if new == DEV_NULL else new[2:]
    return old, new


def parse_unified_diff(text: str, source: str | None = None) -> Patch:
    """Parse ``---``/``+++`` file sections and their ``@@`` hunks.

    Leading ``a/`` and ``b/`` path prefixes are stripped.  Lines outside a
    file section (``diff --git``, ``index`` and similar) are ignored.
    """
    lines = split_lines(text)
    files: list[FilePatch] = []
    i, n = 0, len(lines)

    def is_file_header(k: int) -> bool:
        return lines[k].startswith("--- ") and k + 1 < n and lines[k + 1].startswith("+++ ")

    while i < n:
        if not lines[i].startswith("--- "):
            i += 1
            continue
        if not is_file_header(i):
            raise MalformedDiff("'---' header not followed by '+++'", i + 1, source)
        old, new = _strip_prefixes(_header_path(lines[i]), _header_path(lines[i + 1]))
        if not old or not new:
            raise MalformedDiff("empty path in file header", i + 1, source)
        i += 2
        hunks: list[Hunk] = []
        while i < n and lines[i].startswith("@@"):
            m = _HUNK_RE.match(lines[i])
            if m is None:
                raise MalformedDiff(f"bad hunk header {lines[i].rstrip()!r}", i + 1, source)
            old_start, new_start = int(m.group(1)), int(m.group(3))
            old_len = int(m.group(2)) if m.group(2) is not None else 1
            new_len = int(m.group(4)) if m.group(4) is not None else 1
            header_line = i + 1
            i += 1
            body: list[HunkLine] = []
            old_left, new_left = old_len, new_len
            while old_left or new_left:
                if i >= n:
                    raise HunkCountMismatch("diff ends inside a hunk", header_line, source)
                raw = lines[i]
                if raw.startswith("\\"):
                    if not body:
                        raise MalformedDiff("no-newline marker without a preceding line", i + 1, source)
                    body[-1] = body[-1]._replace(text=body[-1].text.rstrip("\n"))
                    i += 1
                    continue
                if raw in ("\n", "\r\n"):
                    tag, content = CONTEXT, raw
                elif raw[0] in _TAGS:
                    tag, content = _TAGS[raw[0]], raw[1:]
                else:
                    raise HunkCountMismatch("hunk body shorter than its header counts", header_line, source)
                if not content.endswith("\n"):
                    content += "\n"
                if tag != ADD:
                    old_left -= 1
                if tag != DELETE:
                    new_left -= 1
                if old_left < 0 or new_left < 0:
                    raise HunkCountMismatch("hunk body does not match its header counts", header_line, source)
                body.append(HunkLine(tag, content))
                i += 1
            if i < n and lines[i].startswith("\\"):
                if not body:
                    raise MalformedDiff("no-newline marker without a preceding line", i + 1, source)
                body[-1] = body[-1]._replace(text=body[-1].text.rstrip("\n"))
                i += 1
            hunk = Hunk(old_start, old_len, new_start, new_len, tuple(body))
            if hunks and hunk.old_begin < hunks[-1].old_begin + hunks[-1].old_len:
                raise MalformedDiff("hunks out of order or overlapping", header_line, source)
            hunks.append(hunk)
        if i < n and lines[i].startswith(("+", " ", "-", "\\")) and not is_file_header(i):
            raise HunkCountMismatch("hunk body longer than its header counts", i + 1, source)
        files.append(FilePatch(old, new, tuple(hunks)))
    return Patch(tuple(files))


def render_patch(p: Patch) -> str:
    """Render ``p`` back into unified diff text with ``a/``/``b/`` prefixes."""
    out = []
    for fp in p.file_patches:
        out.append(f"--- {fp.old_path if fp.old_path == DEV_NULL else 'a/' + fp.old_path}\n")
        out.append(f"+++ {fp.new_path if fp.new_path == DEV_NULL else 'b/' + fp.new_path}\n")
        for h in fp.hunks:
            out.append(f"@@ -{h.old_start},{h.old_len} +{h.new_start},{h.new_len} @@\n")
            for line in h.lines:
                out.append(_PREFIX[line.tag] + line.text)
                if not line.text.endswith("\n"):
                    out.append("\n" + NO_NEWLINE + "\n")
    return "".join(out)


def reverse_patch(p: Patch) -> Patch:
    swap = {CONTEXT: CONTEXT, DELETE: ADD, ADD: DELETE}
    files = []
    for fp in reversed(p.file_patches):
        hunks = tuple(
            Hunk(h.new_start, h.new_len, h.old_start, h.old_len,
                 tuple(HunkLine(swap[line.tag], line.text) for line in h.lines))
            for h in fp.hunks
        )
        files.append(FilePatch(fp.new_path, fp.old_path, hunks))
    return Patch(tuple(files))


def _apply_hunks(path: str, fp: FilePatch, original: list[str]) -> list[str]:
    result: list[str] = []
    pos = 0
    for k, h in enumerate(fp.hunks):
        begin = h.old_begin
        if begin < pos or begin > len(original):
            found = original[begin] if 0 <= begin < len(original) else None
            expected = h.lines[0].text if h.lines else ""
            raise ContextMismatch(path, k, begin + 1, expected, found)
        result.extend(original[pos:begin])
        j = begin
        for line in h.lines:
            if line.tag != ADD:
                found = original[j] if j < len(original) else None
                if found != line.text:
                    raise ContextMismatch(path, k, j + 1, line.text, found)
                j += 1
            if line.tag != DELETE:
                result.append(line.text)
        pos = j
    result.extend(original[pos:])
    return result


def apply_patch(tree: Tree, p: Patch) -> dict[str, bytes]:
    """Return a new tree with every file patch of ``p`` applied in order.

    Context and deleted lines must match exactly at the stated positions.
    """
    out = dict(tree)
    for fp in p.file_patches:
        if fp.old_path == DEV_NULL:
            if fp.new_path in out:
                raise TargetExists(f"{fp.new_path}: patch creates a file that already exists")
            original: list[str] = []
        else:
            if fp.old_path not in out:
                raise TargetMissing(f"{fp.old_path}: patch target does not exist")
            original = split_lines(_decode(out[fp.old_path]))
        patched = _apply_hunks(fp.path, fp, original)
        if fp.new_path == DEV_NULL:
            if patched:
                k = max(len(fp.hunks) - 1, 0)
                raise ContextMismatch(fp.old_path, k, len(original), "<end of file>", patched[0])
            del out[fp.old_path]
            continue
        if fp.old_path not in (DEV_NULL, fp.new_path):
            if fp.new_path in out:
                raise TargetExists(f"{fp.new_path}: rename target already exists")
            del out[fp.old_path]
        out[fp.new_path] = _encode("".join(patched))
    return out


def apply_patchset(tree: Tree, ps: PatchSet) -> dict[str, bytes]:
    out = dict(tree)
    for path, data in ps.overlays:
        out[path] = data
    for _, patch in ps.diffs:
        out = apply_patch(out, patch)
    return out


def collect_patches(patch_root: str | Path, tool: str) -> PatchSet:
    """Read ``<patch_root>/<tool>/overlay/**`` and ``<patch_root>/<tool>/*.diff``."""
    root = Path(patch_root)
    if not root.is_dir():
        raise UnreadableTree(f"{root}: patch directory does not exist")
    tool_dir = root / tool
    if not tool_dir.exists():
        return PatchSet(tool)
    try:
        overlays = []
        overlay_dir = tool_dir / "overlay"
        if overlay_dir.is_dir():
            files = [p for p in overlay_dir.rglob("*") if p.is_file()]
            for p in sorted(files, key=lambda p: p.relative_to(overlay_dir).as_posix()):
                overlays.append((p.relative_to(overlay_dir).as_posix(), p.read_bytes()))
        diffs = []
        for p in sorted((p for p in tool_dir.glob("*.diff") if p.is_file()), key=lambda p: p.name):
            text = _decode(p.read_bytes())
            diffs.append((p.name, parse_unified_diff(text, source=f"{tool}/{p.name}")))
    except OSError as exc:
        raise UnreadableTree(f"{tool_dir}: {exc}") from exc
    return PatchSet(tool, tuple(overlays), tuple(diffs))


def unified_diff(old: Tree, new: Tree, context: int = 3) -> str:
    """Diff two trees with :mod:`difflib`; the result feeds ``parse_unified_diff``."""
    out = []
    for path in sorted(set(old) | set(new)):
        a, b = old.get(path), new.get(path)
        if a == b:
            continue
        from_name = DEV_NULL if a is None else f"a/{path}"
        to_name = DEV_NULL if b is None else f"b/{path}"
        a_lines = split_lines(_decode(a)) if a is not None else []
        b_lines = split_lines(_decode(b)) if b is not None else []
        body = list(difflib.unified_diff(a_lines, b_lines, from_name, to_name, n=context))
        if not body:
            # empty file created or deleted: headers only
            body = [f"--- {from_name}\n", f"+++ {to_name}\n"]
        for line in body:
            out.append(line if line.endswith("\n") else line + "\n" + NO_NEWLINE + "\n")
    return "".join(out)
