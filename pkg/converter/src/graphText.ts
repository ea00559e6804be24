/**
 * Writers for the pipeline's plain-text dataset layout: one decimal row per
 * node, "i j" edge lines, one integer label per line, and a JSON header
 * recording counts and file names.
 */

import { createHash } from "node:crypto";
import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { ConversionError, GraphData, ManifestFiles } from "./types.js";

export function canonicalEdges(
    rawPairs: Iterable<[number, number]>,
    nodeCount: number,
): Array<[number, number]> {
    const seen = new Set<number>();
    for (const [a, b] of rawPairs) {
        if (!Number.isInteger(a) || !Number.isInteger(b) || a < 0 || b < 0 ||
            a >= nodeCount || b >= nodeCount) {
            throw new ConversionError(
                `edge (${a}, ${b}) out of range for ${nodeCount} nodes`,
            );
        }
        if (a === b) continue; // raw self-loops are dropped
        const lo = Math.min(a, b);
        const hi = Math.max(a, b);
        seen.add(lo * nodeCount + hi);
    }
    const edges: Array<[number, number]> = [];
    for (const key of Array.from(seen).sort((x, y) => x - y)) {
        edges.push([Math.floor(key / nodeCount), key % nodeCount]);
    }
    return edges;
}

function formatValue(x: number): string {
    if (!Number.isFinite(x)) {
        throw new ConversionError(`non-finite feature value ${x}`);
    }
    return String(x);
}

export interface WrittenDataset {
    files: ManifestFiles;
    checksum: string;
    classes: number;
}

export function writeDataset(
    graph: GraphData,
    outDir: string,
    name: string,
): WrittenDataset {
    mkdirSync(outDir, { recursive: true });
    const n = graph.features.length;
    if (n === 0) throw new ConversionError("dataset has no nodes");
    const f = graph.features[0].length;

    const featureLines = graph.features.map((row) => {
        if (row.length !== f) {
            throw new ConversionError(
                `ragged feature rows: expected ${f} values, got ${row.length}`,
            );
        }
        return row.map(formatValue).join(" ");
    });
    const edgeLines = graph.edges.map(([i, j]) => `${i} ${j}`);

    let classes = 0;
    let labelsName: string | null = null;
    const files: Record<string, string> = {};

    files[`${name}.features.txt`] = featureLines.join("\n") + "\n";
    files[`${name}.edges.txt`] =
        edgeLines.length > 0 ? edgeLines.join("\n") + "\n" : "";

    if (graph.labels !== null) {
        if (graph.labels.length !== n) {
            throw new ConversionError(
                `${graph.labels.length} labels for ${n} nodes`,
            );
        }
        classes = Math.max(...graph.labels) + 1;
        labelsName = `${name}.labels.txt`;
        files[labelsName] = graph.labels.map((v) => `${v}`).join("\n") + "\n";
    }

    const header = {
        n,
        f,
        c: classes,
        features: `${name}.features.txt`,
        edges: `${name}.edges.txt`,
        labels: labelsName,
    };
    const headerName = `${name}.header.json`;
    files[headerName] = JSON.stringify(header, null, 2) + "\n";

    const hash = createHash("sha256");
    for (const fileName of Object.keys(files).sort()) {
        writeFileSync(join(outDir, fileName), files[fileName]);
        hash.update(fileName);
        hash.update(files[fileName]);
    }
    return {
        files: {
            header: headerName,
            features: `${name}.features.txt`,
            edges: `${name}.edges.txt`,
            labels: labelsName,
        },
        checksum: hash.digest("hex"),
        classes,
    };
}
