/** Fixture builders: a minimal npy writer and a stored-entry zip writer. */

import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export function makeNpy(
    descr: string,
    shape: number[],
    values: number[],
): Buffer {
    const shapeText =
        shape.length === 1 ? `(${shape[0]},)` : `(${shape.join(", ")})`;
    let header =
        `{'descr': '${descr}', 'fortran_order': False, 'shape': ${shapeText}, }`;
    while ((10 + header.length + 1) % 16 !== 0) header += " ";
    header += "\n";

    const head = Buffer.alloc(10);
    head[0] = 0x93;
    head.write("NUMPY", 1, "ascii");
    head[6] = 1;
    head[7] = 0;
    head.writeUInt16LE(header.length, 8);

    const count = shape.reduce((a, b) => a * b, 1);
    if (values.length !== count) {
        throw new Error(`fixture shape ${shapeText} needs ${count} values`);
    }
    let payload: Buffer;
    switch (descr) {
        case "<f8":
            payload = Buffer.from(new Float64Array(values).buffer);
            break;
        case "<f4":
            payload = Buffer.from(new Float32Array(values).buffer);
            break;
        case "<i8":
            payload = Buffer.from(new BigInt64Array(values.map(BigInt)).buffer);
            break;
        case "<i4":
            payload = Buffer.from(new Int32Array(values).buffer);
            break;
        case "<u4":
            payload = Buffer.from(new Uint32Array(values).buffer);
            break;
        case "|u1":
            payload = Buffer.from(new Uint8Array(values).buffer);
            break;
        default:
            throw new Error(`fixture writer does not handle ${descr}`);
    }
    return Buffer.concat([head, Buffer.from(header, "latin1"), payload]);
}

export function makeZip(entries: Array<{ name: string; data: Buffer }>): Buffer {
    const locals: Buffer[] = [];
    const centrals: Buffer[] = [];
    let offset = 0;
    for (const { name, data } of entries) {
        const nameBytes = Buffer.from(name, "utf8");
        const local = Buffer.alloc(30);
        local.writeUInt32LE(0x04034b50, 0);
        local.writeUInt16LE(20, 4); // version needed
        local.writeUInt16LE(0, 8); // method: stored
        local.writeUInt32LE(0, 14); // crc not checked by the reader
        local.writeUInt32LE(data.length, 18);
        local.writeUInt32LE(data.length, 22);
        local.writeUInt16LE(nameBytes.length, 26);
        locals.push(Buffer.concat([local, nameBytes, data]));

        const central = Buffer.alloc(46);
        central.writeUInt32LE(0x02014b50, 0);
        central.writeUInt16LE(20, 6);
        central.writeUInt16LE(0, 10); // method
        central.writeUInt32LE(data.length, 20);
        central.writeUInt32LE(data.length, 24);
        central.writeUInt16LE(nameBytes.length, 28);
        central.writeUInt32LE(offset, 42);
        centrals.push(Buffer.concat([central, nameBytes]));

        offset += 30 + nameBytes.length + data.length;
    }
    const centralDir = Buffer.concat(centrals);
    const eocd = Buffer.alloc(22);
    eocd.writeUInt32LE(0x06054b50, 0);
    eocd.writeUInt16LE(entries.length, 8);
    eocd.writeUInt16LE(entries.length, 10);
    eocd.writeUInt32LE(centralDir.length, 12);
    eocd.writeUInt32LE(offset, 16);
    return Buffer.concat([...locals, centralDir, eocd]);
}

export function tempDir(prefix: string): string {
    return mkdtempSync(join(tmpdir(), prefix));
}

export function writeCitationFixture(dir: string): void {
    writeFileSync(
        join(dir, "toy.content"),
        [
            "paper_a 1.0 0.0 0.5 biology",
            "paper_b 0.0 1.0 0.25 art",
            "paper_c 1.0 1.0 0.0 biology",
            "paper_d 0.5 0.5 1.0 chemistry",
        ].join("\n") + "\n",
    );
    writeFileSync(
        join(dir, "toy.cites"),
        [
            "paper_a paper_b",
            "paper_b paper_a", // reverse duplicate collapses
            "paper_a paper_c",
            "paper_c paper_c", // self-loop dropped
            "paper_d paper_a",
        ].join("\n") + "\n",
    );
}
