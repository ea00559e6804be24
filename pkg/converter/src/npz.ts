/**
 * Co-purchase / co-authorship archives shipped as .npz: a zip of .npy
 * arrays holding a CSR adjacency (adj_data/indices/indptr/shape), CSR node
 * attributes (attr_*) and a dense label vector. Only the pieces of both
 * formats that these archives use are implemented: stored and deflated zip
 * entries, v1/v2 npy headers, little-endian numeric dtypes, C order.
 */

import { readFileSync } from "node:fs";
import { inflateRawSync } from "node:zlib";

import { canonicalEdges } from "./graphText.js";
import { ConversionError, GraphData } from "./types.js";

const EOCD_SIGNATURE = 0x06054b50;
const CENTRAL_SIGNATURE = 0x02014b50;
const LOCAL_SIGNATURE = 0x04034b50;

export function readZipEntries(buf: Buffer): Map<string, Buffer> {
    let eocd = -1;
    const scanFloor = Math.max(0, buf.length - 22 - 65536);
    for (let pos = buf.length - 22; pos >= scanFloor; pos--) {
        if (buf.readUInt32LE(pos) === EOCD_SIGNATURE) {
            eocd = pos;
            break;
        }
    }
    if (eocd < 0) throw new ConversionError("not a zip archive (no end record)");
    const entryCount = buf.readUInt16LE(eocd + 10);
    let offset = buf.readUInt32LE(eocd + 16);

    const entries = new Map<string, Buffer>();
    for (let i = 0; i < entryCount; i++) {
        if (buf.readUInt32LE(offset) !== CENTRAL_SIGNATURE) {
            throw new ConversionError("corrupt zip central directory");
        }
        const method = buf.readUInt16LE(offset + 10);
        const compressedSize = buf.readUInt32LE(offset + 20);
        const nameLength = buf.readUInt16LE(offset + 28);
        const extraLength = buf.readUInt16LE(offset + 30);
        const commentLength = buf.readUInt16LE(offset + 32);
        const localOffset = buf.readUInt32LE(offset + 42);
        const name = buf.toString("utf8", offset + 46, offset + 46 + nameLength);
        if (compressedSize === 0xffffffff || localOffset === 0xffffffff) {
            throw new ConversionError("zip64 archives are not supported");
        }

        if (buf.readUInt32LE(localOffset) !== LOCAL_SIGNATURE) {
            throw new ConversionError(`corrupt local header for ${name}`);
        }
        const localNameLength = buf.readUInt16LE(localOffset + 26);
        const localExtraLength = buf.readUInt16LE(localOffset + 28);
        const dataStart = localOffset + 30 + localNameLength + localExtraLength;
        const raw = buf.subarray(dataStart, dataStart + compressedSize);
        if (method === 0) {
            entries.set(name, Buffer.from(raw));
        } else if (method === 8) {
            entries.set(name, inflateRawSync(raw));
        } else {
            throw new ConversionError(
                `unsupported compression method ${method} for ${name}`,
            );
        }
        offset += 46 + nameLength + extraLength + commentLength;
    }
    return entries;
}

export interface NpyArray {
    shape: number[];
    values: number[];
}

export function parseNpy(buf: Buffer): NpyArray {
    if (buf.length < 10 || buf[0] !== 0x93 || buf.toString("ascii", 1, 6) !== "NUMPY") {
        throw new ConversionError("not an npy array (bad magic)");
    }
    const major = buf[6];
    let headerLength: number;
    let dataStart: number;
    if (major === 1) {
        headerLength = buf.readUInt16LE(8);
        dataStart = 10 + headerLength;
    } else if (major === 2 || major === 3) {
        headerLength = buf.readUInt32LE(8);
        dataStart = 12 + headerLength;
    } else {
        throw new ConversionError(`unsupported npy version ${major}`);
    }
    const header = buf.toString("latin1", dataStart - headerLength, dataStart);

    const descrMatch = header.match(/'descr':\s*'([^']+)'/);
    const fortranMatch = header.match(/'fortran_order':\s*(True|False)/);
    const shapeMatch = header.match(/'shape':\s*\(([^)]*)\)/);
    if (!descrMatch || !fortranMatch || !shapeMatch) {
        throw new ConversionError(`unparseable npy header: ${header.trim()}`);
    }
    if (fortranMatch[1] === "True") {
        throw new ConversionError("fortran-ordered npy arrays are not supported");
    }
    const shape = shapeMatch[1]
        .split(",")
        .map((t) => t.trim())
        .filter((t) => t.length > 0)
        .map((t) => Number(t));
    const count = shape.reduce((a, b) => a * b, 1);
    const descr = descrMatch[1];

    const aligned = (bytesPer: number) => {
        const slice = Uint8Array.prototype.slice.call(
            buf,
            dataStart,
            dataStart + count * bytesPer,
        );
        if (slice.length !== count * bytesPer) {
            throw new ConversionError("npy payload shorter than its shape");
        }
        return slice.buffer;
    };

    let values: number[];
    switch (descr) {
        case "<f8":
            values = Array.from(new Float64Array(aligned(8)));
            break;
        case "<f4":
            values = Array.from(new Float32Array(aligned(4)));
            break;
        case "<i8":
            values = Array.from(new BigInt64Array(aligned(8)), Number);
            break;
        case "<i4":
            values = Array.from(new Int32Array(aligned(4)));
            break;
        case "<i2":
            values = Array.from(new Int16Array(aligned(2)));
            break;
        case "<u8":
            values = Array.from(new BigUint64Array(aligned(8)), Number);
            break;
        case "<u4":
            values = Array.from(new Uint32Array(aligned(4)));
            break;
        case "<u2":
            values = Array.from(new Uint16Array(aligned(2)));
            break;
        case "|u1":
        case "<u1":
        case "|b1":
            values = Array.from(new Uint8Array(aligned(1)));
            break;
        case "|i1":
        case "<i1":
            values = Array.from(new Int8Array(aligned(1)));
            break;
        default:
            throw new ConversionError(`unsupported npy dtype ${descr}`);
    }
    return { shape, values };
}

function requireArray(entries: Map<string, Buffer>, name: string): NpyArray {
    const entry = entries.get(`${name}.npy`) ?? entries.get(name);
    if (!entry) {
        throw new ConversionError(`npz archive is missing array '${name}'`);
    }
    return parseNpy(entry);
}

function csrRows(
    indptr: number[],
    indices: number[],
    rows: number,
): Array<[number, number]> {
    const pairs: Array<[number, number]> = [];
    for (let i = 0; i < rows; i++) {
        for (let idx = indptr[i]; idx < indptr[i + 1]; idx++) {
            pairs.push([i, indices[idx]]);
        }
    }
    return pairs;
}

export function parseCsrArchive(path: string): GraphData {
    const entries = readZipEntries(readFileSync(path));

    const adjShape = requireArray(entries, "adj_shape").values;
    const adjIndptr = requireArray(entries, "adj_indptr").values;
    const adjIndices = requireArray(entries, "adj_indices").values;
    const n = adjShape[0];
    if (adjShape[1] !== n) {
        throw new ConversionError(`adjacency is ${adjShape[0]}x${adjShape[1]}, not square`);
    }

    const attrShape = requireArray(entries, "attr_shape").values;
    const attrIndptr = requireArray(entries, "attr_indptr").values;
    const attrIndices = requireArray(entries, "attr_indices").values;
    const attrData = requireArray(entries, "attr_data").values;
    if (attrShape[0] !== n) {
        throw new ConversionError(
            `attribute matrix has ${attrShape[0]} rows for ${n} nodes`,
        );
    }
    const f = attrShape[1];
    const features: number[][] = [];
    for (let i = 0; i < n; i++) {
        const row = new Array<number>(f).fill(0);
        for (let idx = attrIndptr[i]; idx < attrIndptr[i + 1]; idx++) {
            row[attrIndices[idx]] = attrData[idx];
        }
        features.push(row);
    }

    const labels = requireArray(entries, "labels").values.map((v) => {
        if (!Number.isInteger(v) || v < 0) {
            throw new ConversionError(`bad label value ${v}`);
        }
        return v;
    });
    if (labels.length !== n) {
        throw new ConversionError(`${labels.length} labels for ${n} nodes`);
    }

    const rawPairs = csrRows(adjIndptr, adjIndices, n);
    const orderedSeen = new Set<string>();
    for (const [i, j] of rawPairs) {
        if (i !== j) orderedSeen.add(`${i}>${j}`);
    }
    return {
        features,
        edges: canonicalEdges(rawPairs, n),
        labels,
        sourceLinks: orderedSeen.size,
    };
}
