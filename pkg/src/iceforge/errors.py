"""Exception hierarchy shared by every iceforge module."""

from __future__ import annotations


class IceforgeError(Exception):
    """Base class for all domain errors."""


# manifest


class ManifestError(IceforgeError):
    pass


class ManifestSyntaxError(ManifestError):
    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class DuplicateTool(ManifestError):
    pass


class DanglingOverride(ManifestError):
    pass


class MissingPin(ManifestError):
    pass


class MalformedCommit(ManifestError):
    pass


class UnknownTool(ManifestError):
    pass


class InvalidManifest(ManifestError):
    def __init__(self, violations) -> None:
        self.violations = tuple(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"manifest is not buildable: {lines}")


# versions


class VersionError(IceforgeError, ValueError):
    pass


class MalformedVersion(VersionError):
    pass


class MalformedRequirement(VersionError):
    pass


class UnknownPackage(VersionError):
    pass


# patches


class PatchError(IceforgeError):
    pass


class UnreadableTree(PatchError):
    pass


class MalformedDiff(PatchError):
    def __init__(self, message: str, line: int, source: str | None = None) -> None:
        where = f"{source}, line {line}" if source else f"line {line}"
        super().__init__(f"{where}: {message}")
        self.reason = message
        self.line = line
        self.source = source


class HunkCountMismatch(MalformedDiff):
    pass


class TargetMissing(PatchError):
    pass


class TargetExists(PatchError):
    pass


class ContextMismatch(PatchError):
    def __init__(self, path: str, hunk: int, line: int, expected: str, found: str | None) -> None:
        super().__init__(
            f"{path}: hunk #{hunk + 1} does not match at line {line}: "
            f"expected {expected!r}, found {found!r}"
        )
        self.path = path
        self.hunk = hunk
        self.line = line
        self.expected = expected
        self.found = found


# planning / emission / execution


class CliNameCollision(IceforgeError):
    pass


class NotStatic(IceforgeError):
    pass


class FetchMiss(IceforgeError):
    pass


class MergeConflict(IceforgeError):
    def __init__(self, result) -> None:
        self.result = result
        parts = [
            f"{c.package} ({', '.join(f'{tool}: {spec}' for tool, spec in c.contributors)})"
            for c in result.conflicts
        ]
        super().__init__("unsatisfiable global requirements: " + "; ".join(parts))


class SymlinkCollision(IceforgeError):
    pass
