"""iceforge command line.

Exit codes: 0 success, 1 domain failure (invalid manifest, failed build
step, dependency conflict), 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .emitter import DEFAULT_BASE_IMAGE, emit_buildfile, emit_shell
from .errors import IceforgeError, MalformedDiff, ManifestSyntaxError, UnreadableTree
from .executor import (
    GitStore,
    execute,
    global_requirement_sets,
    load_registry,
    load_tree,
    verify_layout,
)
from .manifest import GRAMMAR_VERSION, Manifest, parse_manifest, validate_manifest
from .patchkit import PatchSet, collect_patches
from .planner import BuildPlan, ROOT_ENV_VAR, default_root, plan_build, plan_custom_scripts
from .verspec import merge_global_requirements

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

LAYOUT_EXPORT = ".iceforge-layout"


class _UsageError(Exception):
    pass


def _err(message: str) -> None:
    print(f"iceforge: {message}", file=sys.stderr)


def _read_manifest(path: str) -> Manifest:
    try:
        text = Path(path).read_text("utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise _UsageError(f"cannot read manifest {path}: {exc}") from exc
    return parse_manifest(text)


def _load_patches(m: Manifest, patch_dir: str | None) -> dict[str, PatchSet]:
    if patch_dir is None:
        return {}
    found = {}
    for spec in m.tools:
        ps = collect_patches(patch_dir, spec.name)
        if not ps.is_empty:
            found[spec.name] = ps
    known = {t.name for t in m.tools}
    for child in sorted(Path(patch_dir).iterdir()):
        if child.is_dir() and child.name not in known:
            _err(f"warning: patches/{child.name} does not match any manifest tool")
    return found


def _plan(args) -> tuple[Manifest, dict[str, PatchSet], BuildPlan]:
    m = _read_manifest(args.manifest)
    patches = _load_patches(m, args.patches)
    root = args.root or default_root()
    scripts = plan_custom_scripts(args.scripts, m, layout_root=root) if args.scripts else []
    return m, patches, plan_build(m, patches, layout_root=root, custom_scripts=scripts)


def cmd_validate(args) -> int:
    report = validate_manifest(_read_manifest(args.manifest))
    for v in report.violations:
        print(v)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_plan(args) -> int:
    _, _, plan = _plan(args)
    sys.stdout.write(plan.serialize())
    return EXIT_OK


def cmd_emit(args) -> int:
    _, _, plan = _plan(args)
    text = emit_buildfile(plan, args.base_image) if args.format == "buildfile" else emit_shell(plan)
    if args.out is None:
        sys.stdout.write(text)
        return EXIT_OK
    try:
        out = Path(args.out)
        out.write_text(text, "utf-8")
        if args.format == "shell":
            out.chmod(0o755)
    except OSError as exc:
        raise _UsageError(f"cannot write {args.out}: {exc}") from exc
    return EXIT_OK


def cmd_build(args) -> int:
    m, patches, plan = _plan(args)
    sandbox = Path(args.sandbox)
    if sandbox.exists() and (not sandbox.is_dir() or any(sandbox.iterdir())):
        raise _UsageError(f"sandbox {sandbox} must be an empty or missing directory")
    index = load_registry(args.registry)
    store = GitStore.load(args.gitstore) if args.gitstore else GitStore()
    scripts = load_tree(args.scripts) if args.scripts else {}
    log, layout = execute(plan, index, store, patches, scripts)
    sys.stdout.write(log.render())
    try:
        layout.materialize(sandbox)
        (sandbox / LAYOUT_EXPORT).write_text(layout.export(), "utf-8")
    except OSError as exc:
        raise _UsageError(f"cannot write sandbox {sandbox}: {exc}") from exc
    if not log.ok:
        return EXIT_FAIL
    report = verify_layout(layout, m)
    for v in report.violations:
        print(f"VERIFY {v}")
    print(f"layout sha256:{layout.digest()}")
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_check_conflicts(args) -> int:
    m = _read_manifest(args.manifest)
    index = load_registry(args.registry)
    store = GitStore.load(args.gitstore) if args.gitstore else None
    result = merge_global_requirements(global_requirement_sets(m, index, store), index.versions("py"))
    sys.stdout.write(result.render())
    if result.ok and args.write_lock:
        try:
            Path(args.write_lock).write_text(result.render(), "utf-8")
        except OSError as exc:
            raise _UsageError(f"cannot write {args.write_lock}: {exc}") from exc
    return EXIT_OK if result.ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iceforge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"iceforge {__version__} (manifest grammar {GRAMMAR_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def planning(p: argparse.ArgumentParser) -> None:
        p.add_argument("manifest")
        p.add_argument("--patches", metavar="DIR", help="directory holding <tool>/*.diff and <tool>/overlay/")
        p.add_argument("--scripts", metavar="DIR", help="directory holding <tool>/<name> custom CLI scripts")
        p.add_argument("--root", metavar="PATH", help=f"layout root (default: ${ROOT_ENV_VAR} or /opt/iceforge)")

    p = sub.add_parser("validate", help="parse and validate a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plan", help="print the build plan")
    planning(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("emit", help="render the plan as a container build file or shell script")
    planning(p)
    p.add_argument("--format", choices=("buildfile", "shell"), default="buildfile")
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--base-image", default=DEFAULT_BASE_IMAGE)
    p.set_defaults(func=cmd_emit)

    p = sub.add_parser("build", help="run the plan in an offline sandbox")
    planning(p)
    p.add_argument("--registry", required=True, metavar="DIR")
    p.add_argument("--gitstore", metavar="DIR")
    p.add_argument("--sandbox", required=True, metavar="DIR")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("check-conflicts", help="merge the global environment's requirements")
    p.add_argument("manifest")
    p.add_argument("--registry", required=True, metavar="DIR")
    p.add_argument("--gitstore", metavar="DIR")
    p.add_argument("--write-lock", metavar="FILE")
    p.set_defaults(func=cmd_check_conflicts)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # --help, --version and usage errors; keep the code as a return value
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except (_UsageError, ManifestSyntaxError, MalformedDiff, UnreadableTree) as exc:
        _err(str(exc))
        return EXIT_USAGE
    except IceforgeError as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
