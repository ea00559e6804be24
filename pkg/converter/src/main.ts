import { convert } from "./convert.js";
import { ConversionError } from "./types.js";

function usage(): never {
    console.error(
        "usage: node dist/src/main.js <source> <out-dir> [--name <dataset>] [--no-verify]",
    );
    process.exit(2);
}

function main(argv: string[]): number {
    const positional: string[] = [];
    let name: string | undefined;
    let skipVerify = false;
    for (let i = 0; i < argv.length; i++) {
        const arg = argv[i];
        if (arg === "--name") {
            name = argv[++i];
            if (name === undefined) usage();
        } else if (arg === "--no-verify") {
            skipVerify = true;
        } else if (arg.startsWith("--")) {
            usage();
        } else {
            positional.push(arg);
        }
    }
    if (positional.length !== 2) usage();

    try {
        const manifest = convert(positional[0], positional[1], { name, skipVerify });
        console.log(JSON.stringify(manifest, null, 2));
        return 0;
    } catch (err) {
        if (err instanceof ConversionError) {
            console.error(`conversion failed: ${err.message}`);
            return 1;
        }
        throw err;
    }
}

process.exit(main(process.argv.slice(2)));
