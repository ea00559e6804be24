import { statSync } from "node:fs";
import { basename } from "node:path";

import { parseCitationArchive } from "./citation.js";
import { detectDatasetName, verifyPublishedStats } from "./expected.js";
import { writeDataset } from "./graphText.js";
import { parseCsrArchive } from "./npz.js";
import { ConversionError, ConversionManifest, GraphData } from "./types.js";
import { parseWikiJson } from "./wikics.js";

const SUPPORTED =
    "supported layouts: directory with .content/.cites files, " +
    "JSON with features/labels/links, .npz with CSR adjacency and attributes";

function parseSource(source: string): GraphData {
    let stats;
    try {
        stats = statSync(source);
    } catch {
        throw new ConversionError(`source not found: ${source}`);
    }
    if (stats.isDirectory()) {
        return parseCitationArchive(source);
    }
    if (source.endsWith(".json")) {
        return parseWikiJson(source);
    }
    if (source.endsWith(".npz")) {
        return parseCsrArchive(source);
    }
    throw new ConversionError(`unrecognized archive layout: ${source}; ${SUPPORTED}`);
}

export interface ConvertOptions {
    /** Dataset name override; detected from the source name when omitted. */
    name?: string;
    /** Skip the published-statistics check for recognized datasets. */
    skipVerify?: boolean;
}

export function convert(
    source: string,
    outDir: string,
    options: ConvertOptions = {},
): ConversionManifest {
    const graph = parseSource(source);
    const dataset = options.name ?? detectDatasetName(source);
    const stem = dataset ?? basename(source).replace(/\.(json|npz)$/, "");
    const written = writeDataset(graph, outDir, stem);

    const manifest: ConversionManifest = {
        source,
        dataset,
        nodes: graph.features.length,
        features: graph.features[0].length,
        classes: written.classes,
        directedEdges: 2 * graph.edges.length,
        sourceLinks: graph.sourceLinks,
        files: written.files,
        checksum: written.checksum,
    };

    if (!options.skipVerify) {
        const problems = verifyPublishedStats(manifest);
        if (problems.length > 0) {
            throw new ConversionError(
                `converted counts disagree with the published statistics for ` +
                    `${manifest.dataset}: ${problems.join("; ")}`,
            );
        }
    }
    return manifest;
}
