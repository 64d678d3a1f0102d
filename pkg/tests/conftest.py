from __future__ import annotations

from pathlib import Path

import pytest

from iceforge.fixtures import blackice
from iceforge.manifest import parse_manifest
from iceforge.patchkit import collect_patches

ROOT = "/opt/iceforge"
GOLDEN = Path(__file__).parent / "golden"

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        verdict = "PASS" if report.outcome == "passed" else "FAIL"
        _criteria[n] = (verdict, title)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        verdict, title = _criteria[n]
        terminalreporter.write_line(f"criterion {n}: {verdict}  {title}")


@pytest.fixture(autouse=True)
def _no_root_override(monkeypatch):
    monkeypatch.delenv("ICEFORGE_ROOT", raising=False)


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return blackice()


@pytest.fixture(scope="session")
def manifest_text(fixture_dir) -> str:
    return (fixture_dir / "manifest.toml").read_text("utf-8")


@pytest.fixture(scope="session")
def manifest(manifest_text):
    return parse_manifest(manifest_text)


@pytest.fixture(scope="session")
def patch_sets(manifest, fixture_dir):
    found = {}
    for spec in manifest.tools:
        ps = collect_patches(fixture_dir / "patches", spec.name)
        if not ps.is_empty:
            found[spec.name] = ps
    return found


@pytest.fixture(scope="session")
def build_inputs(manifest, patch_sets, fixture_dir):
    """(plan, registry, git store, patches, scripts) for the full fixture build."""
    from iceforge.executor import GitStore, load_registry, load_tree
    from iceforge.planner import plan_build, plan_custom_scripts

    scripts = plan_custom_scripts(fixture_dir / "cli_scripts", manifest, layout_root=ROOT)
    plan = plan_build(manifest, patch_sets, layout_root=ROOT, custom_scripts=scripts)
    return (
        plan,
        load_registry(fixture_dir / "registry"),
        GitStore.load(fixture_dir / "gitstore"),
        patch_sets,
        load_tree(fixture_dir / "cli_scripts"),
    )
