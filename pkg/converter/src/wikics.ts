/**
 * Wiki-style JSON archives: one object with dense `features` rows, integer
 * `labels`, and directed adjacency lists under `links`. Extra keys (split
 * masks and the like) are ignored.
 */

import { readFileSync } from "node:fs";

import { canonicalEdges } from "./graphText.js";
import { ConversionError, GraphData } from "./types.js";

export function parseWikiJson(path: string): GraphData {
    let payload: unknown;
    try {
        payload = JSON.parse(readFileSync(path, "utf8"));
    } catch (err) {
        throw new ConversionError(`${path}: invalid JSON: ${err}`);
    }
    const obj = payload as Record<string, unknown>;
    for (const key of ["features", "labels", "links"]) {
        if (!Array.isArray(obj[key])) {
            throw new ConversionError(`${path}: missing or non-array key '${key}'`);
        }
    }
    const features = obj.features as number[][];
    const labels = obj.labels as number[];
    const links = obj.links as number[][];
    const n = features.length;
    if (labels.length !== n || links.length !== n) {
        throw new ConversionError(
            `${path}: features/labels/links disagree on node count ` +
                `(${n}, ${labels.length}, ${links.length})`,
        );
    }

    const rawPairs: Array<[number, number]> = [];
    const orderedSeen = new Set<string>();
    links.forEach((neighbors, i) => {
        for (const j of neighbors) {
            rawPairs.push([i, j]);
            if (i !== j) orderedSeen.add(`${i}>${j}`);
        }
    });

    return {
        features,
        edges: canonicalEdges(rawPairs, n),
        labels: labels.map((v) => {
            if (!Number.isInteger(v) || v < 0) {
                throw new ConversionError(`${path}: bad label ${v}`);
            }
            return v;
        }),
        sourceLinks: orderedSeen.size,
    };
}
