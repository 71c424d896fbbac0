/**
 * Figure job files: the same flat `key = value` format the harness uses.
 *
 *     input_csv    = golden/embedding.csv
 *     kind         = embedding | nmse | spectrum | tree
 *     output_image = out/embedding.svg
 *     color_groups = 10            (embedding only, optional)
 */

import { FIGURE_KINDS, FigureKind } from './figures.js';

export interface FigureJob {
    inputCsv: string;
    kind: FigureKind;
    outputImage: string;
    colorGroups: number;
}

export class JobError extends Error {}

export function parseJob(text: string): FigureJob {
    const entries = new Map<string, string>();
    text.split(/\r?\n/).forEach((raw, i) => {
        const line = raw.split('#', 1)[0].trim();
        if (line === '') {
            return;
        }
        const eq = line.indexOf('=');
        if (eq < 0) {
            throw new JobError(`line ${i + 1}: expected 'key = value', got '${raw}'`);
        }
        const key = line.slice(0, eq).trim();
        const value = line.slice(eq + 1).trim();
        if (entries.has(key)) {
            throw new JobError(`duplicate key '${key}'`);
        }
        entries.set(key, value);
    });

    for (const key of ['input_csv', 'kind', 'output_image']) {
        if (!entries.has(key)) {
            throw new JobError(`missing required key '${key}'`);
        }
    }
    const kind = entries.get('kind')!;
    if (!FIGURE_KINDS.includes(kind as FigureKind)) {
        throw new JobError(`unknown figure kind '${kind}' (expected ${FIGURE_KINDS.join(' | ')})`);
    }
    const groups = Number(entries.get('color_groups') ?? '10');
    if (!Number.isInteger(groups) || groups < 1) {
        throw new JobError(`color_groups must be a positive integer, got '${entries.get('color_groups')}'`);
    }
    return {
        inputCsv: entries.get('input_csv')!,
        kind: kind as FigureKind,
        outputImage: entries.get('output_image')!,
        colorGroups: groups,
    };
}
