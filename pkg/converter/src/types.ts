export interface GraphData {
    /** Dense N x F feature rows. */
    features: number[][];
    /** Undirected edges, each stored once as [i, j] with i < j. */
    edges: Array<[number, number]>;
    labels: number[] | null;
    /** Distinct ordered (i, j) pairs in the source, self-loops excluded. */
    sourceLinks: number;
}

export interface ManifestFiles {
    header: string;
    features: string;
    edges: string;
    labels: string | null;
}

export interface ConversionManifest {
    source: string;
    dataset: string | null;
    nodes: number;
    features: number;
    classes: number;
    /** Directed-pair convention: twice the undirected edge count. */
    directedEdges: number;
    sourceLinks: number;
    files: ManifestFiles;
    checksum: string;
}

export class ConversionError extends Error {}
