// Palette-side view of the plugin registry: grouping, version ordering, and
// the requirement string a freshly dropped card should carry.

import type { ManifestDoc, PluginKind, Section } from "./types.js";

export interface PluginGroup {
  name: string;
  kind: PluginKind;
  /** All registered versions of this plugin, newest first. */
  versions: ManifestDoc[];
}

export function parseVersion(text: string): [number, number, number] {
  const parts = text.split(".").map(Number);
  if (parts.length !== 3 || parts.some((n) => !Number.isInteger(n) || n < 0)) {
    throw new Error(`bad version string '${text}'`);
  }
  return [parts[0], parts[1], parts[2]];
}

export function compareVersions(a: string, b: string): number {
  const va = parseVersion(a);
  const vb = parseVersion(b);
  for (let i = 0; i < 3; i++) {
    if (va[i] !== vb[i]) return va[i] - vb[i];
  }
  return 0;
}

const KIND_ORDER: readonly PluginKind[] = ["transform", "split", "loss", "accuracy"];

/** Group the flat manifest list by plugin name, newest version first. */
export function groupPlugins(manifests: ManifestDoc[]): PluginGroup[] {
  const byName = new Map<string, ManifestDoc[]>();
  for (const m of manifests) {
    const bucket = byName.get(m.name);
    if (bucket) bucket.push(m);
    else byName.set(m.name, [m]);
  }
  const groups: PluginGroup[] = [];
  for (const [name, versions] of byName) {
    versions.sort((a, b) => compareVersions(b.version, a.version));
    groups.push({ name, kind: versions[0].kind, versions });
  }
  groups.sort((a, b) =>
    KIND_ORDER.indexOf(a.kind) - KIND_ORDER.indexOf(b.kind)
    || a.name.localeCompare(b.name));
  return groups;
}

/** Palette sections in display order; kinds with no plugins are dropped. */
export function catalogByKind(groups: PluginGroup[]): Map<PluginKind, PluginGroup[]> {
  const out = new Map<PluginKind, PluginGroup[]>();
  for (const kind of KIND_ORDER) {
    const matching = groups.filter((g) => g.kind === kind);
    if (matching.length > 0) out.set(kind, matching);
  }
  return out;
}

/** Only transforms live on the board; their manifest says which columns. */
export function allowedSections(manifest: ManifestDoc): Section[] {
  return manifest.kind === "transform" ? manifest.scopes : [];
}

export function canDrop(manifest: ManifestDoc, section: Section): boolean {
  return allowedSections(manifest).includes(section);
}

/**
 * Requirement string for a card created from the palette.
 *
 * Picking the newest version within its major line means "track this major",
 * so the card floats with ^MAJOR; picking anything older is a deliberate
 * downgrade and gets pinned exactly.
 */
export function pickRequirement(group: PluginGroup, chosen: string): string {
  const [major] = parseVersion(chosen);
  const sameMajor = group.versions.filter(
    (m) => parseVersion(m.version)[0] === major);
  if (sameMajor.length > 0 && sameMajor[0].version === chosen) {
    return `^${major}`;
  }
  return `=${chosen}`;
}

/** The concrete manifest a requirement would resolve to, or null. */
export function resolveRequirement(group: PluginGroup,
                                   requirement: string): ManifestDoc | null {
  if (requirement.startsWith("=")) {
    const wanted = requirement.slice(1);
    return group.versions.find((m) => m.version === wanted) ?? null;
  }
  if (requirement.startsWith("^")) {
    const parts = requirement.slice(1).split(".").map(Number);
    if (parts.some((n) => !Number.isInteger(n) || n < 0)) return null;
    for (const m of group.versions) {  // newest first
      const v = parseVersion(m.version);
      if (v[0] !== parts[0]) continue;
      if (parts.length >= 2 && v[1] < parts[1]) continue;
      return m;
    }
    return null;
  }
  return null;
}
