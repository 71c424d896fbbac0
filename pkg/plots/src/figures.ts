/**
 * The four figure kinds rendered from harness CSVs.
 *
 * embedding — two scatter panels, population positions next to the
 *             eigenvector projection, nodes colored by attribute group
 * nmse      — estimator-vs-baseline error curves over the observation
 *             rate, with the break-even line at 1
 * spectrum  — eigenvalue magnitude profile on log-log axes
 * tree      — posterior flatness and branching survival against omega,
 *             one curve per conditioning depth
 */

import { Table, numericColumn, requireColumns } from './csv.js';
import {
    DEFAULT_MARGIN,
    FIG_HEIGHT,
    FIG_WIDTH,
    PALETTE,
    Scene,
    drawAxes,
    extent,
    linearScale,
    tickLabel,
} from './svg.js';

export type FigureKind = 'embedding' | 'nmse' | 'spectrum' | 'tree';

export const FIGURE_KINDS: FigureKind[] = ['embedding', 'nmse', 'spectrum', 'tree'];

export function renderFigure(kind: FigureKind, table: Table, colorGroups: number): string {
    switch (kind) {
        case 'embedding':
            return renderEmbedding(table, colorGroups);
        case 'nmse':
            return renderNmse(table);
        case 'spectrum':
            return renderSpectrum(table);
        case 'tree':
            return renderTree(table);
    }
}

// ---------------------------------------------------------------------------
// embedding
// ---------------------------------------------------------------------------

function renderEmbedding(table: Table, colorGroups: number): string {
    requireColumns(table, 'embedding', ['sigma', 'emp_x', 'emp_y', 'ideal_x', 'ideal_y']);
    const sigma = numericColumn(table, 'sigma');
    const panels: Array<{ title: string; xs: number[]; ys: number[] }> = [
        { title: 'population embedding', xs: numericColumn(table, 'ideal_x'), ys: numericColumn(table, 'ideal_y') },
        { title: 'eigenvector embedding', xs: numericColumn(table, 'emp_x'), ys: numericColumn(table, 'emp_y') },
    ];

    const scene = new Scene(FIG_WIDTH, FIG_HEIGHT);
    const panelWidth = (FIG_WIDTH - 3 * 30) / 2;
    const plotHeight = FIG_HEIGHT - 80;
    // attribute groups: deciles of sigma by default
    const group = (s: number) =>
        Math.min(Math.max(Math.floor(s * colorGroups), 0), colorGroups - 1);

    panels.forEach((panel, p) => {
        const left = 30 + p * (panelWidth + 30);
        const xs = linearScale(extent(panel.xs), [left, left + panelWidth]);
        const ys = linearScale(extent(panel.ys), [40 + plotHeight, 40]);
        scene.add(`<rect x="${left}" y="40" width="${panelWidth.toFixed(3)}" `
            + `height="${plotHeight}" fill="none" stroke="#999999"/>`);
        scene.text(left + panelWidth / 2, 28, panel.title, 13);
        for (let i = 0; i < sigma.length; i++) {
            if (!Number.isFinite(panel.xs[i]) || !Number.isFinite(panel.ys[i])) {
                continue;
            }
            scene.circle(xs(panel.xs[i]), ys(panel.ys[i]), 2.2,
                PALETTE[group(sigma[i]) % PALETTE.length], 0.85);
        }
    });
    scene.text(FIG_WIDTH / 2, FIG_HEIGHT - 12,
        `${sigma.length} nodes, ${colorGroups} attribute groups`, 11);
    return scene.render();
}

// ---------------------------------------------------------------------------
// nmse
// ---------------------------------------------------------------------------

interface Series {
    label: string;
    color: string;
    points: Array<[number, number]>;     // per-omega means
    replicates: Array<[number, number]>; // raw per-replicate values
}

function meansByOmega(omega: number[], values: number[]): Array<[number, number]> {
    const buckets = new Map<number, number[]>();
    omega.forEach((w, i) => {
        if (Number.isFinite(values[i])) {
            buckets.set(w, [...(buckets.get(w) ?? []), values[i]]);
        }
    });
    return [...buckets.entries()]
        .map(([w, vs]): [number, number] => [w, vs.reduce((a, b) => a + b, 0) / vs.length])
        .sort((a, b) => a[0] - b[0]);
}

function renderNmse(table: Table): string {
    requireColumns(table, 'nmse', ['omega_over_n', 'nmse_b']);
    const omega = numericColumn(table, 'omega_over_n');
    const series: Series[] = [];
    const candidates: Array<[string, string, string]> = [
        ['nmse_b', 'edge probability', PALETTE[0]],
        ['nmse_mu', 'label distribution', PALETTE[2]],
    ];
    for (const [col, label, color] of candidates) {
        if (!table.header.includes(col)) {
            continue;
        }
        const vals = numericColumn(table, col);
        const reps = omega.map((w, i): [number, number] => [w, vals[i]])
            .filter(([, v]) => Number.isFinite(v));
        if (reps.length === 0) {
            continue;
        }
        series.push({ label, color, points: meansByOmega(omega, vals), replicates: reps });
    }

    const margin = DEFAULT_MARGIN;
    const plotWidth = FIG_WIDTH - margin.left - margin.right;
    const plotHeight = FIG_HEIGHT - margin.top - margin.bottom;
    const allY = series.flatMap((s) => s.replicates.map(([, v]) => v)).concat([0, 1.05]);
    const xs = linearScale(extent(omega, 0.02), [margin.left, margin.left + plotWidth]);
    const ys = linearScale(extent(allY, 0.02), [margin.top + plotHeight, margin.top]);

    const scene = new Scene();
    drawAxes(scene, xs, ys, margin, 'observation rate omega/n', 'normalized error',
        'estimator error relative to the empirical-average baseline', plotWidth, plotHeight);
    // break-even reference: below 1 the spectral estimator wins
    scene.line(margin.left, ys(1), margin.left + plotWidth, ys(1), '#888888', 1, '5,4');
    scene.text(margin.left + plotWidth - 4, ys(1) - 5, 'baseline = 1', 10, 'end', '#666666');
    series.forEach((s, i) => {
        for (const [w, v] of s.replicates) {
            scene.circle(xs(w), ys(v), 2.4, s.color, 0.45);
        }
        scene.polyline(s.points.map(([w, v]) => [xs(w), ys(v)]), s.color, 2);
        scene.text(margin.left + 10, margin.top + 14 + 14 * i, s.label, 11, 'start', s.color);
    });
    return scene.render();
}

// ---------------------------------------------------------------------------
// spectrum
// ---------------------------------------------------------------------------

function renderSpectrum(table: Table): string {
    requireColumns(table, 'spectrum', ['k', 'lambda_k']);
    const k = numericColumn(table, 'k');
    const lam = numericColumn(table, 'lambda_k');
    const points = k.map((kk, i): [number, number] => [kk, Math.abs(lam[i])])
        .filter(([, v]) => v > 0);
    if (points.length === 0) {
        throw new Error('spectrum CSV holds no nonzero eigenvalues');
    }
    const logPoints = points.map(([kk, v]): [number, number] => [Math.log10(kk), Math.log10(v)]);

    const margin = DEFAULT_MARGIN;
    const plotWidth = FIG_WIDTH - margin.left - margin.right;
    const plotHeight = FIG_HEIGHT - margin.top - margin.bottom;
    const xs = linearScale(extent(logPoints.map((p) => p[0]), 0.03),
        [margin.left, margin.left + plotWidth]);
    const ys = linearScale(extent(logPoints.map((p) => p[1]), 0.05),
        [margin.top + plotHeight, margin.top]);

    const scene = new Scene();
    drawAxes(scene, xs, ys, margin, 'log10 k', 'log10 |lambda_k|',
        'eigenvalue magnitude profile', plotWidth, plotHeight);
    scene.polyline(logPoints.map(([a, b]) => [xs(a), ys(b)]), PALETTE[0], 1.5);
    for (const [a, b] of logPoints) {
        scene.circle(xs(a), ys(b), 2.4, PALETTE[0]);
    }
    return scene.render();
}

// ---------------------------------------------------------------------------
// tree
// ---------------------------------------------------------------------------

function renderTree(table: Table): string {
    requireColumns(table, 'tree', ['omega', 'R', 'mean_abs_dev', 'ci_lo', 'ci_hi', 'survival']);
    const omega = numericColumn(table, 'omega');
    const depth = numericColumn(table, 'R');
    const dev = numericColumn(table, 'mean_abs_dev');
    const lo = numericColumn(table, 'ci_lo');
    const hi = numericColumn(table, 'ci_hi');
    const survival = numericColumn(table, 'survival');
    const depths = [...new Set(depth)].sort((a, b) => a - b);

    const margin = DEFAULT_MARGIN;
    const plotWidth = FIG_WIDTH - margin.left - margin.right;
    const plotHeight = FIG_HEIGHT - margin.top - margin.bottom;
    const xs = linearScale(extent(omega, 0.04), [margin.left, margin.left + plotWidth]);
    const ys = linearScale(extent(hi.concat(survival, [0]), 0.04),
        [margin.top + plotHeight, margin.top]);

    const scene = new Scene();
    drawAxes(scene, xs, ys, margin, 'observation intensity omega',
        'posterior deviation / survival',
        'root-attribute recoverability against omega', plotWidth, plotHeight);
    depths.forEach((R, i) => {
        const color = PALETTE[i % PALETTE.length];
        const rows = omega.map((w, j) => ({ w, j })).filter(({ j }) => depth[j] === R)
            .sort((a, b) => a.w - b.w);
        scene.polyline(rows.map(({ w, j }) => [xs(w), ys(dev[j])]), color, 2);
        for (const { w, j } of rows) {
            scene.line(xs(w), ys(lo[j]), xs(w), ys(hi[j]), color, 1);
            scene.circle(xs(w), ys(dev[j]), 2.4, color);
        }
        scene.polyline(rows.map(({ w, j }) => [xs(w), ys(survival[j])]), color, 1, '3,3');
        scene.text(margin.left + 10, margin.top + 14 + 14 * i,
            `depth R = ${tickLabel(R)} (dashed: survival)`, 11, 'start', color);
    });
    return scene.render();
}
