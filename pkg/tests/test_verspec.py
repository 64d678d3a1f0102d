from __future__ import annotations

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import oracles
from iceforge.errors import MalformedRequirement, MalformedVersion, UnknownPackage
from iceforge.verspec import (
    MergeStatus,
    Ordering,
    Requirement,
    Specifier,
    check_pins,
    compare_versions,
    merge_global_requirements,
    normalize_name,
    parse_requirement,
    parse_requirements_text,
    parse_version,
    render_lockfile,
    satisfies,
)

V = parse_version
R = parse_requirement


def versions(max_segments=4, max_value=20):
    release = st.lists(st.integers(0, max_value), min_size=1, max_size=max_segments)
    pre = st.one_of(st.none(), st.tuples(st.sampled_from(["a", "b", "rc"]), st.integers(0, 3)))
    post = st.one_of(st.none(), st.integers(0, 3))

    def build(parts):
        rel, pr, po = parts
        text = ".".join(map(str, rel))
        if pr:
            text += f"{pr[0]}{pr[1]}"
        if po is not None:
            text += f".post{po}"
        return text

    return st.tuples(release, pre, post).map(build)


# -- parsing -----------------------------------------------------------------

def test_parse_release():
    assert V("0.10.2").release == (0, 10, 2)


def test_parse_pre():
    v = V("1.0rc1")
    assert v.release == (1, 0)
    assert v.pre == ("rc", 1)
    assert v.post is None


def test_parse_post():
    assert V("2.0.post3").post == 3


@pytest.mark.parametrize("text", ["", "1.", ".1", "1..2", "v1.0", "1.0-beta", "1.0rc", "1.0.dev1", "1!2.0", "1.0+local"])
def test_malformed_versions(text):
    with pytest.raises(MalformedVersion):
        V(text)


@given(versions())
def test_render_roundtrip(text):
    assert str(V(text)) == text
    assert V(str(V(text))) == V(text)


# -- ordering ----------------------------------------------------------------

@pytest.mark.parametrize(
    "a, b, expected",
    [
        ("1.2", "1.10", Ordering.LT),
        ("1.0", "1.0", Ordering.EQ),
        ("1.0rc1", "1.0", Ordering.LT),
        ("1.0.0.0", "1.0", Ordering.EQ),
        ("1.0a1", "1.0b1", Ordering.LT),
        ("1.0b2", "1.0rc1", Ordering.LT),
        ("1.0", "1.0.post1", Ordering.LT),
        ("1.0rc1.post1", "1.0", Ordering.LT),
        ("2", "1.99.99", Ordering.GT),
    ],
)
def test_compare_examples(a, b, expected):
    assert compare_versions(V(a), V(b)) is expected
    assert oracles.cmp(a, b) == int(expected)


@given(versions(), versions())
def test_compare_matches_oracle(a, b):
    assert int(compare_versions(V(a), V(b))) == oracles.cmp(a, b)


@given(versions(), versions(), versions())
def test_ordering_axioms(a, b, c):
    va, vb, vc = V(a), V(b), V(c)
    assert compare_versions(va, vb) == -compare_versions(vb, va)
    if va <= vb and vb <= vc:
        assert va <= vc
    assert (va < vb) + (va == vb) + (va > vb) == 1


@given(versions(), versions())
def test_equal_versions_hash_equal(a, b):
    if V(a) == V(b):
        assert hash(V(a)) == hash(V(b))


# -- requirements ------------------------------------------------------------

def test_requirement_examples():
    assert R("garak==0.10.2") == Requirement("garak", frozenset({Specifier("==", V("0.10.2"))}))
    r = R("transformers>=4.30,<5")
    assert r.name == "transformers"
    assert r.specifiers == {Specifier(">=", V("4.30")), Specifier("<", V("5"))}
    assert R("Foo_Bar") == Requirement("foo-bar", frozenset())


@pytest.mark.parametrize("name", ["Foo_Bar", "foo.bar", "FOO-BAR", "foo__bar", "foo-_bar"])
def test_name_normalization(name):
    assert normalize_name(name) == "foo-bar"


@pytest.mark.parametrize("text", ["", "==1.0", "foo=1.0", "foo==", "foo>=1.0,", "foo~=1", "foo ==1.0 extra"])
def test_malformed_requirements(text):
    with pytest.raises((MalformedRequirement, MalformedVersion)):
        R(text)


def test_requirements_text_skips_comments():
    reqs = parse_requirements_text("# pinned\npyrit>=0.5\n\nrigging~=2.0  # shared\n")
    assert [r.name for r in reqs] == ["pyrit", "rigging"]


@pytest.mark.parametrize(
    "version, req, expected",
    [
        ("1.4.2", "x~=1.4", True),
        ("2.0", "x~=1.4", False),
        ("1.3", "x~=1.4", False),
        ("1.4.9", "x~=1.4.2", True),
        ("1.5.0", "x~=1.4.2", False),
        ("2.0", "x>=1,!=2.0", False),
        ("2.0.0", "x!=2.0", False),
        ("7.7", "x", True),
    ],
)
def test_satisfies_examples(version, req, expected):
    assert satisfies(V(version), R(req)) is expected


@given(versions(max_segments=3, max_value=6), versions(max_segments=3, max_value=6),
       st.sampled_from(["==", "!=", ">=", "<=", ">", "<", "~="]))
def test_satisfies_matches_oracle(v, target, op):
    assume(op != "~=" or len(oracles.release_of(target)) >= 2)
    assert satisfies(V(v), R(f"x{op}{target}")) is oracles.spec_holds(v, op, target)


@given(versions())
def test_equality_specifiers(v):
    assert satisfies(V(v), R(f"x=={v}"))
    assert not satisfies(V(v), R(f"x!={v}"))


# -- merge -------------------------------------------------------------------

INDEX = {"x": ["0.9", "1.5", "2.1"]}


def test_merge_picks_highest_common():
    result = merge_global_requirements({"A": [R("x>=1.0")], "B": [R("x<2.0")]}, INDEX)
    assert result.status is MergeStatus.OK
    assert result.pins == {"x": V("1.5")}


def test_merge_reports_conflict():
    result = merge_global_requirements({"A": [R("x>=2.0")], "B": [R("x<2.0")]}, INDEX)
    assert result.status is MergeStatus.CONFLICT
    assert result.pins == {}
    (c,) = result.conflicts
    assert c.package == "x"
    assert c.contributors == (("A", ">=2.0"), ("B", "<2.0"))
    assert result.render() == "CONFLICT x: A >=2.0; B <2.0\n"


def test_merge_empty():
    result = merge_global_requirements({}, INDEX)
    assert result.ok and result.pins == {}


def test_merge_unknown_package():
    with pytest.raises(UnknownPackage):
        merge_global_requirements({"A": [R("ghost")]}, INDEX)


def test_merge_is_order_independent():
    sets = {"B": [R("x<2.0")], "A": [R("x>=1.0")]}
    flipped = dict(reversed(list(sets.items())))
    assert merge_global_requirements(sets, INDEX) == merge_global_requirements(flipped, INDEX)


def test_lockfile_format():
    pins = {"rigging": V("2.0.0"), "pyrit": V("0.5.2")}
    assert render_lockfile(pins) == "pyrit==0.5.2\nrigging==2.0.0\n"


def test_check_pins():
    pins = {"x": V("1.5")}
    assert check_pins(pins, {"A": [R("x>=1.0")]}) == []
    assert check_pins(pins, {"A": [R("x>=2.0")], "B": [R("y")]}) == [
        "A: x==1.5 violates x>=2.0",
        "B: y has no pin",
    ]


_ops = st.sampled_from(["==", "!=", ">=", "<=", ">", "<"])
_small = st.sampled_from(["0.9", "1.0", "1.5", "2.0rc1", "2.0", "2.1", "3.0.post1"])


@settings(max_examples=200)
@given(st.lists(st.tuples(st.sampled_from("ABC"), st.sampled_from("xy"), _ops, _small), max_size=6))
def test_merge_matches_brute_force(reqs):
    registry = {"x": ["0.9", "1.5", "2.0rc1", "2.1"], "y": ["1.0", "2.0", "3.0.post1"]}
    sets: dict[str, list] = {}
    for tool, pkg, op, ver in reqs:
        sets.setdefault(tool, []).append(R(f"{pkg}{op}{ver}"))
    result = merge_global_requirements(sets, registry)
    status, expected = oracles.brute_force_merge([(t, p, [(o, v)]) for t, p, o, v in reqs], registry)
    assert result.status.value == status
    if status == "OK":
        assert {k: str(v) for k, v in result.pins.items()} == expected
        assert check_pins(result.pins, sets) == []
    else:
        assert {c.package for c in result.conflicts} == expected


@settings(max_examples=100)
@given(st.lists(st.tuples(st.sampled_from("AB"), _ops, _small), max_size=4), _ops, _small)
def test_merge_monotone_in_conflicts(reqs, op, ver):
    registry = {"x": ["0.9", "1.5", "2.0rc1", "2.1"]}
    sets: dict[str, list] = {}
    for tool, o, v in reqs:
        sets.setdefault(tool, []).append(R(f"x{o}{v}"))
    before = merge_global_requirements(sets, registry)
    sets.setdefault("C", []).append(R(f"x{op}{ver}"))
    after = merge_global_requirements(sets, registry)
    if not before.ok:
        assert not after.ok
