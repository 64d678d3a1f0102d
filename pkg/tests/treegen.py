"""Random file trees and edits for patch round-trip testing."""

from __future__ import annotations

import random

PATHS = ["a.py", "pkg/b.py", "pkg/sub/c.txt", "README", "docs/notes.md"]
# a small pool on purpose: repeated lines make ambiguous contexts likely
POOL = ["import os", "x = 1", "return x", "pass", "", "# note", "def f():", "    pass", "}", "value: 2"]


def _line(rng: random.Random) -> str:
    if rng.random() < 0.7:
        return rng.choice(POOL)
    return "".join(rng.choice("abcxyz _=") for _ in range(rng.randint(1, 12)))


def _file(rng: random.Random) -> bytes:
    eol = "\r\n" if rng.random() < 0.2 else "\n"
    lines = [_line(rng) + eol for _ in range(rng.randint(0, 25))]
    if lines and rng.random() < 0.2:
        lines[-1] = lines[-1].rstrip("\r\n") or "tail"
    return "".join(lines).encode("utf-8")


def random_tree(rng: random.Random) -> dict[str, bytes]:
    return {p: _file(rng) for p in rng.sample(PATHS, rng.randint(1, 4))}


def random_edit(rng: random.Random, tree: dict[str, bytes]) -> dict[str, bytes]:
    out = dict(tree)
    for _ in range(rng.randint(1, 5)):
        roll = rng.random()
        if roll < 0.08 and out:
            del out[rng.choice(sorted(out))]
            continue
        if roll < 0.16:
            free = [p for p in PATHS if p not in out]
            if free:
                out[rng.choice(free)] = _file(rng)
                continue
        if not out:
            continue
        path = rng.choice(sorted(out))
        text = out[path].decode("utf-8")
        eol = "\r\n" if "\r\n" in text else "\n"
        lines = text.split("\n")
        lines = [line + "\n" for line in lines[:-1]] + ([lines[-1]] if lines[-1] else [])
        k = rng.randint(0, len(lines))
        op = rng.choice(["insert", "replace", "delete", "toggle_eol"])
        if op == "insert" or not lines:
            lines.insert(k, _line(rng) + eol)
        elif op == "replace":
            lines[min(k, len(lines) - 1)] = _line(rng) + eol
        elif op == "delete":
            del lines[min(k, len(lines) - 1)]
        elif lines[-1].endswith("\n"):
            lines[-1] = lines[-1].rstrip("\r\n")
        else:
            lines[-1] += eol
        out[path] = "".join(lines).encode("utf-8")
    return out


def context_sites(patch) -> list[tuple[str, int]]:
    """(path, 0-based old line) for every context line with a non-newline character."""
    sites = []
    for fp in patch.file_patches:
        if fp.old_path == "/dev/null":
            continue
        for h in fp.hunks:
            j = h.old_begin
            for line in h.lines:
                if line.tag == "context" and line.text.rstrip("\r\n"):
                    sites.append((fp.old_path, j))
                if line.tag != "add":
                    j += 1
    return sites


def perturb(tree: dict[str, bytes], path: str, index: int, rng: random.Random) -> dict[str, bytes]:
    """Change exactly one character (never the line feed) of line ``index`` in ``path``."""
    lines = tree[path].decode("utf-8").split("\n")
    line = lines[index]
    body = line[:-1] if line.endswith("\r") else line
    pos = rng.randrange(len(body)) if body else len(line) - 1
    old = line[pos]
    new = "#" if old != "#" else "@"
    lines[index] = line[:pos] + new + line[pos + 1:]
    out = dict(tree)
    out[path] = "\n".join(lines).encode("utf-8")
    return out
