/**
 * Minimal CSV handling for the harness output schemas: plain comma
 * separation, one header row, no quoting (the producers never emit it).
 */

export interface Table {
    header: string[];
    rows: string[][];
}

export class SchemaError extends Error {}

export function parseCsv(text: string): Table {
    const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
    if (lines.length === 0) {
        throw new SchemaError('empty CSV: no header row');
    }
    const header = lines[0].split(',').map((h) => h.trim());
    const rows = lines.slice(1).map((line) => line.split(','));
    return { header, rows };
}

/** Validate that every required column exists; report all missing at once. */
export function requireColumns(table: Table, kind: string, needed: string[]): void {
    const missing = needed.filter((name) => !table.header.includes(name));
    if (missing.length > 0) {
        throw new SchemaError(
            `CSV does not match the '${kind}' schema; missing columns: ${missing.join(', ')}`,
        );
    }
    if (table.rows.length === 0) {
        throw new SchemaError(`CSV has no data rows for kind '${kind}'`);
    }
}

export function column(table: Table, name: string): string[] {
    const idx = table.header.indexOf(name);
    if (idx < 0) {
        throw new SchemaError(`missing column ${name}`);
    }
    return table.rows.map((row) => row[idx] ?? '');
}

export function numericColumn(table: Table, name: string): number[] {
    return column(table, name).map((v) => (v === '' ? NaN : Number(v)));
}
