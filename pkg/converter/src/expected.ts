/**
 * Published statistics for the five supported benchmark datasets. When a
 * source archive is recognized by name, the converted counts must agree
 * with this table. Edge counts in the literature mix two conventions, so
 * a dataset's figure may match either the directed-pair count (twice the
 * undirected edges) or the raw source link count.
 */

import { ConversionManifest } from "./types.js";

export interface PublishedStats {
    nodes: number;
    edges: number;
    features: number;
    classes: number;
}

export const PUBLISHED_STATS: Record<string, PublishedStats> = {
    cora: { nodes: 2708, edges: 10556, features: 1433, classes: 7 },
    "wiki-cs": { nodes: 11701, edges: 216123, features: 300, classes: 10 },
    "coauthor-cs": { nodes: 18333, edges: 163788, features: 6805, classes: 15 },
    "amazon-computers": { nodes: 13752, edges: 245861, features: 767, classes: 10 },
    "amazon-photo": { nodes: 7650, edges: 238162, features: 745, classes: 8 },
};

const NAME_PATTERNS: Array<[RegExp, string]> = [
    [/cora/, "cora"],
    [/wiki/, "wiki-cs"],
    [/photo/, "amazon-photo"],
    [/computers/, "amazon-computers"],
    [/(coauthor|academic).*cs|cs.*(coauthor|academic)/, "coauthor-cs"],
];

export function detectDatasetName(source: string): string | null {
    const base = source.toLowerCase().replace(/\\/g, "/").split("/").pop() ?? "";
    for (const [pattern, name] of NAME_PATTERNS) {
        if (pattern.test(base)) return name;
    }
    return null;
}

export function verifyPublishedStats(manifest: ConversionManifest): string[] {
    if (manifest.dataset === null) return [];
    const expected = PUBLISHED_STATS[manifest.dataset];
    if (!expected) return [];
    const problems: string[] = [];
    if (manifest.nodes !== expected.nodes) {
        problems.push(`nodes: got ${manifest.nodes}, published ${expected.nodes}`);
    }
    if (
        manifest.directedEdges !== expected.edges &&
        manifest.sourceLinks !== expected.edges
    ) {
        problems.push(
            `edges: got ${manifest.directedEdges} directed pairs / ` +
                `${manifest.sourceLinks} source links, published ${expected.edges}`,
        );
    }
    if (manifest.features !== expected.features) {
        problems.push(
            `features: got ${manifest.features}, published ${expected.features}`,
        );
    }
    if (manifest.classes !== expected.classes) {
        problems.push(`classes: got ${manifest.classes}, published ${expected.classes}`);
    }
    return problems;
}
