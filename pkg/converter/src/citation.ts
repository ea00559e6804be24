/**
 * Citation-network archives shipped as two plain-text files: a `.content`
 * file with `<paper_id> <feature...> <class_label>` lines and a `.cites`
 * file with `<cited> <citing>` pairs. Paper ids and class labels are
 * arbitrary strings; nodes are numbered in content order and classes by
 * sorted label name.
 */

import { readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";

import { canonicalEdges } from "./graphText.js";
import { ConversionError, GraphData } from "./types.js";

export function findCitationFiles(dir: string): { content: string; cites: string } {
    const entries = readdirSync(dir);
    const content = entries.filter((e) => e.endsWith(".content"));
    const cites = entries.filter((e) => e.endsWith(".cites"));
    if (content.length !== 1 || cites.length !== 1) {
        throw new ConversionError(
            `${dir}: expected exactly one .content and one .cites file, ` +
                `found ${content.length} and ${cites.length}`,
        );
    }
    return { content: join(dir, content[0]), cites: join(dir, cites[0]) };
}

export function parseCitationArchive(dir: string): GraphData {
    const paths = findCitationFiles(dir);

    const idToIndex = new Map<string, number>();
    const features: number[][] = [];
    const labelNames: string[] = [];
    let width: number | null = null;

    const contentLines = readFileSync(paths.content, "utf8").split("\n");
    for (let lineno = 0; lineno < contentLines.length; lineno++) {
        const line = contentLines[lineno].trim();
        if (line === "") continue;
        const tokens = line.split(/\s+/);
        if (tokens.length < 3) {
            throw new ConversionError(
                `${paths.content}:${lineno + 1}: expected id, features, label`,
            );
        }
        const id = tokens[0];
        if (idToIndex.has(id)) {
            throw new ConversionError(
                `${paths.content}:${lineno + 1}: duplicate paper id ${id}`,
            );
        }
        const row = tokens.slice(1, -1).map((t) => {
            const v = Number(t);
            if (Number.isNaN(v)) {
                throw new ConversionError(
                    `${paths.content}:${lineno + 1}: bad feature value ${t}`,
                );
            }
            return v;
        });
        if (width === null) width = row.length;
        else if (row.length !== width) {
            throw new ConversionError(
                `${paths.content}:${lineno + 1}: expected ${width} features, got ${row.length}`,
            );
        }
        idToIndex.set(id, features.length);
        features.push(row);
        labelNames.push(tokens[tokens.length - 1]);
    }
    if (features.length === 0) {
        throw new ConversionError(`${paths.content}: no content rows`);
    }

    const classNames = Array.from(new Set(labelNames)).sort();
    const classIndex = new Map(classNames.map((c, i) => [c, i]));
    const labels = labelNames.map((c) => classIndex.get(c)!);

    const rawPairs: Array<[number, number]> = [];
    const orderedSeen = new Set<string>();
    const citesLines = readFileSync(paths.cites, "utf8").split("\n");
    for (let lineno = 0; lineno < citesLines.length; lineno++) {
        const line = citesLines[lineno].trim();
        if (line === "") continue;
        const tokens = line.split(/\s+/);
        if (tokens.length !== 2) {
            throw new ConversionError(
                `${paths.cites}:${lineno + 1}: expected two ids, got ${line}`,
            );
        }
        const pair: number[] = tokens.map((t) => {
            const idx = idToIndex.get(t);
            if (idx === undefined) {
                throw new ConversionError(
                    `${paths.cites}:${lineno + 1}: unknown paper id ${t}`,
                );
            }
            return idx;
        });
        rawPairs.push([pair[0], pair[1]]);
        if (pair[0] !== pair[1]) orderedSeen.add(`${pair[0]}>${pair[1]}`);
    }

    return {
        features,
        edges: canonicalEdges(rawPairs, features.length),
        labels,
        sourceLinks: orderedSeen.size,
    };
}
