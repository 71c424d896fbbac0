/**
 * Figure rendering CLI.
 *
 * Usage: node dist/render.js render --job <file>
 *
 * Reads the job file, parses its input CSV, renders the figure kind to an
 * SVG string, and writes the output image only when rendering succeeded
 * (a bad or empty CSV leaves no file behind). Rendering is deterministic:
 * the same job and inputs produce byte-identical output.
 */

import { mkdirSync, readFileSync, writeFileSync } from 'fs';
import { dirname, resolve } from 'path';

import { parseCsv } from './csv.js';
import { renderFigure } from './figures.js';
import { FigureJob, parseJob } from './jobfile.js';

export function renderJob(job: FigureJob, baseDir = '.'): string {
    const csvPath = resolve(baseDir, job.inputCsv);
    const table = parseCsv(readFileSync(csvPath, 'utf8'));
    const svg = renderFigure(job.kind, table, job.colorGroups);
    const outPath = resolve(baseDir, job.outputImage);
    mkdirSync(dirname(outPath), { recursive: true });
    writeFileSync(outPath, svg);
    return outPath;
}

export function renderJobFile(jobPath: string): string {
    const job = parseJob(readFileSync(jobPath, 'utf8'));
    return renderJob(job, dirname(resolve(jobPath)));
}

export function main(argv: string[]): number {
    if (argv[0] !== 'render') {
        console.error('usage: render --job <file>');
        return 2;
    }
    const jobIdx = argv.indexOf('--job');
    if (jobIdx < 0 || jobIdx + 1 >= argv.length) {
        console.error('usage: render --job <file>');
        return 2;
    }
    try {
        const outPath = renderJobFile(argv[jobIdx + 1]);
        console.log(`wrote ${outPath}`);
        return 0;
    } catch (err) {
        console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
        return 1;
    }
}

if (process.argv[1] && process.argv[1].endsWith('render.js')) {
    process.exit(main(process.argv.slice(2)));
}
