import assert from "node:assert/strict";
import { writeFileSync } from "node:fs";
import { join } from "node:path";
import { test } from "node:test";

import { parseCitationArchive } from "../src/citation.js";
import { ConversionError } from "../src/types.js";
import { tempDir, writeCitationFixture } from "./helpers.js";

test("parses content and cites into an indexed graph", () => {
    const dir = tempDir("citation-");
    writeCitationFixture(dir);
    const graph = parseCitationArchive(dir);

    assert.equal(graph.features.length, 4);
    assert.deepEqual(graph.features[0], [1.0, 0.0, 0.5]);
    // classes sorted by name: art=0, biology=1, chemistry=2
    assert.deepEqual(graph.labels, [1, 0, 1, 2]);
    // a-b (deduped), a-c (self loop dropped), a-d
    assert.deepEqual(graph.edges, [
        [0, 1],
        [0, 2],
        [0, 3],
    ]);
    assert.equal(graph.sourceLinks, 4); // a>b, b>a, a>c, d>a
});

test("rejects citations of unknown paper ids with a line number", () => {
    const dir = tempDir("citation-");
    writeCitationFixture(dir);
    writeFileSync(join(dir, "toy.cites"), "paper_a paper_zzz\n");
    assert.throws(
        () => parseCitationArchive(dir),
        (err: Error) =>
            err instanceof ConversionError &&
            err.message.includes(":1") &&
            err.message.includes("paper_zzz"),
    );
});

test("rejects duplicate paper ids", () => {
    const dir = tempDir("citation-");
    writeFileSync(
        join(dir, "toy.content"),
        "p1 1.0 a\np1 2.0 b\n",
    );
    writeFileSync(join(dir, "toy.cites"), "");
    assert.throws(
        () => parseCitationArchive(dir),
        (err: Error) => err.message.includes("duplicate"),
    );
});

test("rejects ragged feature rows", () => {
    const dir = tempDir("citation-");
    writeFileSync(
        join(dir, "toy.content"),
        "p1 1.0 2.0 a\np2 1.0 b\n",
    );
    writeFileSync(join(dir, "toy.cites"), "");
    assert.throws(
        () => parseCitationArchive(dir),
        (err: Error) => err.message.includes(":2"),
    );
});

test("requires exactly one content and one cites file", () => {
    const dir = tempDir("citation-");
    writeFileSync(join(dir, "a.content"), "p1 1.0 a\n");
    assert.throws(
        () => parseCitationArchive(dir),
        (err: Error) => err.message.includes("exactly one"),
    );
});
