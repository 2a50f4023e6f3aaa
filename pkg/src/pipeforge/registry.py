"""Plugin registry: discovery, registration, and version resolution.

Plugins live on the filesystem as ``<dir>/<name>/<version>/manifest.json``
plus, for external plugins, the executable the manifest points at. The
registry is built single-threaded at load/rescan time and immutable
afterwards; a rescan swaps in a whole new registry object.

Version requirements use a deliberately small grammar:

    ^MAJOR          highest version with that major
    ^MAJOR.MINOR    highest version with that major and minor >= MINOR
    =X.Y.Z          exactly that version
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import BindingError, DuplicateError, NotFoundError, SchemaError
from .manifest import (
    PluginManifest,
    VERSION_RE,
    format_version,
    manifest_from_dict,
    parse_manifest,
    parse_version,
)

_CARET_RE = re.compile(r"^\^(\d+)(?:\.(\d+))?$")


@dataclass(frozen=True)
class VersionReq:
    """Parsed version requirement."""

    raw: str
    exact: tuple[int, int, int] | None = None
    major: int | None = None
    minor: int | None = None

    @classmethod
    def parse(cls, text: str) -> "VersionReq":
        text = text.strip()
        if text.startswith("="):
            body = text[1:]
            if not VERSION_RE.match(body):
                raise SchemaError(f"invalid exact requirement {text!r}")
            return cls(raw=text, exact=parse_version(body))
        m = _CARET_RE.match(text)
        if m:
            return cls(raw=text, major=int(m.group(1)),
                       minor=int(m.group(2)) if m.group(2) else None)
        raise SchemaError(
            f"invalid version requirement {text!r} (use ^MAJOR, ^MAJOR.MINOR or =X.Y.Z)")

    def matches(self, version: tuple[int, int, int]) -> bool:
        if self.exact is not None:
            return version == self.exact
        if version[0] != self.major:
            return False
        if self.minor is not None:
            return version[1] >= self.minor
        return True


@dataclass(frozen=True)
class RegistryEntry:
    manifest: PluginManifest

    @property
    def key(self) -> tuple[str, tuple[int, int, int]]:
        return (self.manifest.name, self.manifest.version)


class Registry:
    """Immutable-after-load collection of plugin manifests."""

    def __init__(self):
        self._entries: dict[tuple[str, tuple[int, int, int]], RegistryEntry] = {}

    def register(self, manifest: PluginManifest, *, handshake: bool = True) -> str:
        """Add one manifest; returns the entry id ``name@version``.

        External bindings are verified by the manifest handshake unless
        ``handshake=False`` (used by tests that fabricate registries).
        """
        key = (manifest.name, manifest.version)
        if key in self._entries:
            raise DuplicateError(
                f"plugin {manifest.name}@{manifest.version_str} already registered")
        target = next(iter(manifest.exec.values()))
        if "builtin" in manifest.exec:
            from . import builtins as builtin_pack  # late import, avoids a cycle
            if not builtin_pack.has_builtin(manifest.kind, target, manifest.allowed_scopes):
                raise BindingError(
                    f"plugin {manifest.name}: no builtin {manifest.kind} {target!r} "
                    f"covering scopes {list(manifest.allowed_scopes)}")
        else:
            if manifest.kind == "split" or "dataset" in manifest.allowed_scopes:
                raise BindingError(
                    f"plugin {manifest.name}: external processes cannot host "
                    f"{'split plugins' if manifest.kind == 'split' else 'dataset-scope transforms'} "
                    f"(the wire protocol has no whole-dataset request)")
            exe = Path(target)
            if not exe.exists():
                raise BindingError(
                    f"plugin {manifest.name}: executable {target} does not exist")
            if handshake:
                _verify_handshake(manifest, exe)
        self._entries[key] = RegistryEntry(manifest=manifest)
        return f"{manifest.name}@{manifest.version_str}"

    def catalog(self) -> list[PluginManifest]:
        """All manifests, name ascending then version descending."""
        return [
            self._entries[k].manifest
            for k in sorted(self._entries, key=lambda k: (k[0], tuple(-x for x in k[1])))
        ]

    def versions_of(self, name: str) -> list[tuple[int, int, int]]:
        return sorted(v for (n, v) in self._entries if n == name)

    def resolve(self, name: str, requirement: str) -> PluginManifest:
        """Highest version satisfying the requirement (exact returns exactly it)."""
        req = VersionReq.parse(requirement)
        available = self.versions_of(name)
        if not available:
            raise NotFoundError(f"no plugin named {name!r}")
        matching = [v for v in available if req.matches(v)]
        if not matching:
            listed = ", ".join(format_version(v) for v in available)
            raise NotFoundError(
                f"plugin {name!r}: no version satisfies {requirement!r} "
                f"(available: {listed})")
        return self._entries[(name, max(matching))].manifest

    def get(self, name: str, version: tuple[int, int, int]) -> PluginManifest:
        try:
            return self._entries[(name, version)].manifest
        except KeyError:
            raise NotFoundError(f"plugin {name}@{format_version(version)} not found") from None

    def __len__(self) -> int:
        return len(self._entries)


def _verify_handshake(manifest: PluginManifest, exe: Path) -> None:
    """Start the executable and check its self-reported manifest field-for-field.

    The exec path is excluded from the comparison: the registry resolves
    relative paths to absolute ones, so the plugin cannot know the exact
    string. Everything else must match.
    """
    from .external import manifest_handshake
    reported = manifest_handshake(exe)
    try:
        parsed = manifest_from_dict(reported)
    except SchemaError as e:
        raise BindingError(f"plugin {manifest.name}: handshake manifest invalid: {e}") from None
    if (dataclasses.replace(parsed, exec={}) != dataclasses.replace(manifest, exec={})
            or "external" not in parsed.exec):
        raise BindingError(
            f"plugin {manifest.name}@{manifest.version_str}: handshake manifest "
            f"does not match the on-disk manifest")


def builtin_plugins_dir() -> Path:
    """Directory holding the built-in transform pack manifests (package data)."""
    return Path(__file__).parent / "builtin_plugins"


def load_registry(plugin_dirs: list[Path | str] | None = None,
                  *, include_builtin: bool = True,
                  handshake: bool = True) -> Registry:
    """Scan plugin directories and build a fresh registry.

    Layout: ``<dir>/<name>/<version>/manifest.json``. The built-in pack is
    scanned first, then each extra directory in the given order.
    """
    registry = Registry()
    dirs: list[Path] = []
    if include_builtin:
        dirs.append(builtin_plugins_dir())
    for d in plugin_dirs or []:
        dirs.append(Path(d))
    for root in dirs:
        if not root.is_dir():
            continue
        for manifest_path in sorted(root.glob("*/*/manifest.json")):
            text = manifest_path.read_text(encoding="utf-8")
            manifest = parse_manifest(text)
            expect_name = manifest_path.parent.parent.name
            expect_version = manifest_path.parent.name
            if manifest.name != expect_name or manifest.version_str != expect_version:
                raise SchemaError(
                    f"{manifest_path}: manifest says {manifest.name}@{manifest.version_str} "
                    f"but lives under {expect_name}/{expect_version}")
            if "external" in manifest.exec:
                # relative executable paths are anchored at the version dir
                target = Path(manifest.exec["external"])
                if not target.is_absolute():
                    target = manifest_path.parent / target
                    manifest = dataclasses.replace(
                        manifest, exec={"external": str(target)})
            registry.register(manifest, handshake=handshake)
    return registry
