/**
 * Deterministic SVG scene building: fixed canvas, stable 3-decimal
 * coordinate formatting, no timestamps or randomness anywhere, so a
 * re-render of the same inputs is byte-identical.
 */

export const FIG_WIDTH = 760;
export const FIG_HEIGHT = 420;

// Ten-group categorical palette (group count is configurable; colors cycle).
export const PALETTE = [
    '#4e79a7', '#f28e2b', '#e15759', '#76b7b2', '#59a14f',
    '#edc948', '#b07aa1', '#ff9da7', '#9c755f', '#bab0ac',
];

export const fmt = (x: number): string => {
    const s = x.toFixed(3);
    return s === '-0.000' ? '0.000' : s;
};

export interface Margin {
    top: number;
    right: number;
    bottom: number;
    left: number;
}

export const DEFAULT_MARGIN: Margin = { top: 34, right: 16, bottom: 40, left: 56 };

export class Scene {
    private parts: string[] = [];

    constructor(readonly width = FIG_WIDTH, readonly height = FIG_HEIGHT) {}

    add(part: string): void {
        this.parts.push(part);
    }

    circle(x: number, y: number, r: number, fill: string, opacity = 1): void {
        const op = opacity < 1 ? ` fill-opacity="${fmt(opacity)}"` : '';
        this.add(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${fmt(r)}" fill="${fill}"${op}/>`);
    }

    line(x1: number, y1: number, x2: number, y2: number, stroke: string,
         width = 1, dash?: string): void {
        const d = dash ? ` stroke-dasharray="${dash}"` : '';
        this.add(`<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" `
            + `stroke="${stroke}" stroke-width="${fmt(width)}"${d}/>`);
    }

    polyline(points: Array<[number, number]>, stroke: string, width = 1.5, dash?: string): void {
        const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(' ');
        const d = dash ? ` stroke-dasharray="${dash}"` : '';
        this.add(`<polyline points="${pts}" fill="none" stroke="${stroke}" `
            + `stroke-width="${fmt(width)}"${d}/>`);
    }

    text(x: number, y: number, content: string, size = 11, anchor = 'middle',
         fill = '#333333'): void {
        this.add(`<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" `
            + `text-anchor="${anchor}" fill="${fill}" `
            + `font-family="Helvetica, Arial, sans-serif">${escapeXml(content)}</text>`);
    }

    render(): string {
        return `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" `
            + `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">\n`
            + `<rect width="${this.width}" height="${this.height}" fill="#ffffff"/>\n`
            + this.parts.join('\n')
            + '\n</svg>\n';
    }
}

function escapeXml(s: string): string {
    return s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

// ---------------------------------------------------------------------------
// Scales and axes
// ---------------------------------------------------------------------------

export interface Scale {
    (value: number): number;
    domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
    const [d0, d1] = domain;
    const [r0, r1] = range;
    const span = d1 - d0 || 1;
    const scale = ((value: number) => r0 + ((value - d0) / span) * (r1 - r0)) as Scale;
    scale.domain = domain;
    return scale;
}

export function extent(values: number[], padFraction = 0.05): [number, number] {
    const finite = values.filter((v) => Number.isFinite(v));
    if (finite.length === 0) {
        return [0, 1];
    }
    let lo = Math.min(...finite);
    let hi = Math.max(...finite);
    if (lo === hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    const pad = (hi - lo) * padFraction;
    return [lo - pad, hi + pad];
}

export function ticks(domain: [number, number], count = 5): number[] {
    const [lo, hi] = domain;
    const rawStep = (hi - lo) / Math.max(count, 1);
    const power = Math.floor(Math.log10(rawStep));
    const base = 10 ** power;
    const step = [1, 2, 5, 10].map((m) => m * base).find((s) => (hi - lo) / s <= count) ?? base * 10;
    const first = Math.ceil(lo / step) * step;
    const out: number[] = [];
    for (let v = first; v <= hi + step * 1e-9; v += step) {
        out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
    }
    return out;
}

export const tickLabel = (v: number): string => {
    if (v !== 0 && (Math.abs(v) >= 1e4 || Math.abs(v) < 1e-3)) {
        return v.toExponential(1);
    }
    return String(Number(v.toPrecision(6)));
};

/** Standard x/y axes with tick marks, labels and a plot frame. */
export function drawAxes(scene: Scene, xScale: Scale, yScale: Scale, margin: Margin,
                         xLabel: string, yLabel: string, title: string,
                         plotWidth: number, plotHeight: number): void {
    const x0 = margin.left;
    const y0 = margin.top + plotHeight;
    scene.line(x0, y0, x0 + plotWidth, y0, '#333333');
    scene.line(x0, margin.top, x0, y0, '#333333');
    for (const t of ticks(xScale.domain)) {
        const px = xScale(t);
        scene.line(px, y0, px, y0 + 4, '#333333');
        scene.text(px, y0 + 16, tickLabel(t));
    }
    for (const t of ticks(yScale.domain)) {
        const py = yScale(t);
        scene.line(x0 - 4, py, x0, py, '#333333');
        scene.text(x0 - 7, py + 3.5, tickLabel(t), 11, 'end');
        scene.line(x0, py, x0 + plotWidth, py, '#eeeeee');
    }
    scene.text(x0 + plotWidth / 2, y0 + 32, xLabel, 12);
    scene.text(14, margin.top - 14, yLabel, 12, 'start');
    scene.text(x0 + plotWidth / 2, 18, title, 13);
}
