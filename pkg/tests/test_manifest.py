from __future__ import annotations

import dataclasses
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iceforge.errors import (
    DanglingOverride,
    DuplicateTool,
    MalformedCommit,
    ManifestSyntaxError,
    MissingPin,
    UnknownTool,
)
from iceforge.manifest import (
    Ecosystem,
    Entrypoint,
    Environment,
    Manifest,
    Source,
    ToolClass,
    classify_tool,
    parse_manifest,
    render_manifest,
    validate_manifest,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

COMMIT = "0123456789abcdef0123456789abcdef01234567"


# -- parse examples ----------------------------------------------------------

def test_single_index_tool():
    m = parse_manifest('python_tools = ["garak==0.10.2"]\n')
    (t,) = m.python_tools
    assert (t.name, t.ecosystem, t.source, t.version_pin, t.environment) == (
        "garak", Ecosystem.PY, Source.INDEX, "0.10.2", Environment.ISOLATED)
    assert t.entrypoints == (Entrypoint("garak", "bin/garak"),)


def test_empty_file():
    m = parse_manifest("")
    assert m == Manifest()
    assert m.tools == ()


def test_comments_only():
    assert parse_manifest("# nothing here\n\n   # still nothing\n") == Manifest()


def test_js_tool_defaults():
    m = parse_manifest('nodejs_tools = ["promptfoo@0.107.0"]')
    (t,) = m.nodejs_tools
    assert t.environment is Environment.PROJECT
    assert t.entrypoints == (Entrypoint("promptfoo", "node_modules/.bin/promptfoo"),)


def test_git_override_supplies_pin():
    m = parse_manifest(f'python_tools = ["easyedit"]\ngit_tools = ["easyedit=https://x/y#{COMMIT}"]\n')
    t = m.tool("easyedit")
    assert t.source is Source.GIT
    assert (t.git_url, t.git_commit, t.version_pin) == ("https://x/y", COMMIT, None)
    assert t.pin == COMMIT


def test_fixture_manifest(manifest):
    assert len(manifest.tools) == 14
    assert [t.name for t in manifest.tools if t.environment is Environment.GLOBAL] == ["pyrit", "rigging"]
    assert sum(t.source is Source.GIT for t in manifest.tools) == 6
    assert validate_manifest(manifest).ok


def test_fixture_is_toml(manifest_text):
    data = tomllib.loads(manifest_text)
    assert len(data["python_tools"]) == 13
    assert data["tool"]["eval-harness"]["entrypoints"] == ["lm-eval:bin/lm_eval"]


@pytest.mark.parametrize(
    "text, error",
    [
        ('system_tools = ["ghost"]', DanglingOverride),
        (f'git_tools = ["ghost=https://x#{COMMIT}"]', DanglingOverride),
        ('python_tools = ["a==1", "a==2"]', DuplicateTool),
        ('python_tools = ["a==1"]\nnodejs_tools = ["a@1"]', DuplicateTool),
        ('python_tools = ["a"]', MissingPin),
        ('nodejs_tools = ["a"]', MissingPin),
        (f'python_tools = ["a"]\ngit_tools = ["a=https://x#{COMMIT[:39]}"]', MalformedCommit),
        (f'python_tools = ["a"]\ngit_tools = ["a=https://x#{COMMIT.upper()}"]', MalformedCommit),
        ('python_tools = ["a==1"]\n[tool.b]\nentrypoints = ["b:bin/b"]', DanglingOverride),
    ],
)
def test_parse_errors(text, error):
    with pytest.raises(error):
        parse_manifest(text)


@pytest.mark.parametrize(
    "text, line, column",
    [
        ('python_tools = "garak"', 1, 16),
        ('python_tools = ["garak==0.10.2"\n', 2, 1),
        ('\n\nfoo = []', 3, 1),
        ('python_tools = ["Garak==1"]', 1, 17),
        ('python_tools = ["garak==one"]', 1, 17),
        ('python_tools = ["a==1"] extra', 1, 25),
        ('python_tools = ["unterminated]', 1, 17),
        ('python_tools = []\npython_tools = []', 2, 1),
    ],
)
def test_syntax_error_position(text, line, column):
    with pytest.raises(ManifestSyntaxError) as info:
        parse_manifest(text)
    assert (info.value.line, info.value.column) == (line, column)


def test_trailing_commas_and_multiline():
    m = parse_manifest('python_tools = [\n  "a==1",  # first\n  "b==2",\n]\n')
    assert [t.name for t in m.tools] == ["a", "b"]


def test_unknown_tool_lookup(manifest):
    with pytest.raises(UnknownTool):
        manifest.tool("ghost")


# -- validation --------------------------------------------------------------

def test_cli_name_collision():
    m = parse_manifest('python_tools = ["a==1", "b==1"]\n[tool.b]\nentrypoints = ["a:bin/a"]\n')
    assert validate_manifest(m).codes() == ["CliNameCollision"]


def test_validate_short_commit():
    m = parse_manifest(f'python_tools = ["a"]\ngit_tools = ["a=https://x#{COMMIT}"]')
    bad = dataclasses.replace(m.python_tools[0], git_commit=COMMIT[:39])
    m = dataclasses.replace(m, python_tools=(bad,), git_tools={"a": ("https://x", COMMIT[:39])})
    assert validate_manifest(m).codes() == ["MalformedCommit"]


def test_validate_structural_violations():
    base = parse_manifest('python_tools = ["a==1"]\nnodejs_tools = ["j@1"]')
    a, j = base.python_tools[0], base.nodejs_tools[0]
    cases = {
        "EnvironmentMismatch": dataclasses.replace(base, nodejs_tools=(dataclasses.replace(j, environment=Environment.ISOLATED),)),
        "MissingPin": dataclasses.replace(base, python_tools=(dataclasses.replace(a, version_pin=None),)),
        "MalformedVersion": dataclasses.replace(base, python_tools=(dataclasses.replace(a, version_pin="one"),)),
        "InvalidName": dataclasses.replace(base, python_tools=(dataclasses.replace(a, name="A"),)),
        "DuplicateCliName": dataclasses.replace(
            base, python_tools=(dataclasses.replace(a, entrypoints=(Entrypoint("a", "x"), Entrypoint("a", "y"))),)),
        "DanglingOverride": dataclasses.replace(base, system_tools=("ghost",)),
        "SystemJsOverlap": dataclasses.replace(base, system_tools=("j",)),
    }
    for code, m in cases.items():
        assert code in validate_manifest(m).codes(), code


# -- classification ----------------------------------------------------------

def test_classify_examples(manifest):
    assert classify_tool(manifest, "pyrit") is ToolClass.DYNAMIC_GLOBAL
    assert classify_tool(manifest, "promptfoo") is ToolClass.STATIC_PROJECT
    assert classify_tool(manifest, "easyedit") is ToolClass.STATIC_ISOLATED


def test_classify_unknown(manifest):
    with pytest.raises(UnknownTool):
        classify_tool(manifest, "ghost")


# -- generated manifests -----------------------------------------------------

_names = st.from_regex(r"[a-z][a-z0-9_-]{0,7}", fullmatch=True)
_versions = st.from_regex(r"[0-9]{1,2}(\.[0-9]{1,2}){0,2}(rc[0-9])?", fullmatch=True)
_commits = st.from_regex(r"[0-9a-f]{40}", fullmatch=True)


@st.composite
def manifests(draw):
    names = draw(st.lists(_names, min_size=0, max_size=8, unique=True))
    split = draw(st.integers(0, len(names)))
    py, js = names[:split], names[split:]
    system = [n for n in py if draw(st.booleans())]
    git = {n: (f"https://example.org/{n}.git", draw(_commits)) for n in py if draw(st.booleans())}
    py_entries = []
    for n in py:
        if n in git and draw(st.booleans()):
            py_entries.append(n)
        else:
            py_entries.append(f"{n}=={draw(_versions)}")
    lines = [
        "python_tools = [" + ", ".join(f'"{e}"' for e in py_entries) + "]",
        "nodejs_tools = [" + ", ".join(f'"{n}@{draw(_versions)}"' for n in js) + "]",
        "system_tools = [" + ", ".join(f'"{n}"' for n in system) + "]",
        "git_tools = [" + ", ".join(f'"{n}={u}#{c}"' for n, (u, c) in git.items()) + "]",
        'global_requirements = ["shared>=1.0"]' if draw(st.booleans()) else "",
    ]
    for n in names:
        if draw(st.booleans()):
            lines.append(f'[tool.{n}]\nentrypoints = ["{n}-cli:bin/{n}-cli", "{n}-x:lib/x"]')
    return "\n".join(lines) + "\n", names, set(system)


@settings(max_examples=80)
@given(manifests())
def test_roundtrip(case):
    text, _, _ = case
    m = parse_manifest(text)
    canonical = render_manifest(m)
    assert parse_manifest(canonical) == m
    assert render_manifest(parse_manifest(canonical)) == canonical


@settings(max_examples=80)
@given(manifests())
def test_order_preserved(case):
    text, names, _ = case
    assert [t.name for t in parse_manifest(text).tools] == names


@settings(max_examples=80)
@given(manifests())
def test_classification_property(case):
    text, names, system = case
    m = parse_manifest(text)
    for n in names:
        assert (classify_tool(m, n) is ToolClass.DYNAMIC_GLOBAL) == (n in system)
        assert (classify_tool(m, n) is ToolClass.STATIC_PROJECT) == (m.tool(n).ecosystem is Ecosystem.JS)


@settings(max_examples=50)
@given(manifests())
def test_rendered_text_is_toml(case):
    text, _, _ = case
    m = parse_manifest(text)
    data = tomllib.loads(render_manifest(m))
    assert len(data["python_tools"]) == len(m.python_tools)
    assert data["system_tools"] == list(m.system_tools)


@settings(max_examples=50)
@given(manifests())
def test_generated_manifests_validate(case):
    text, _, _ = case
    assert validate_manifest(parse_manifest(text)).ok
