/**
 * Hand-assembled SVG: scales from d3, element strings built here.
 *
 * Every coordinate goes through fmt() so repeated renders of the same inputs
 * are byte-identical.
 */

import { scaleLinear, ticks } from "d3";

export const PANEL_W = 720;
export const PANEL_H = 180;
export const MARGIN = { left: 64, right: 20, top: 30, bottom: 40 };

export const COLORS = {
  line: "#4361ee",
  buy: "#2d6a4f",
  sell: "#e63946",
  bar: "#4361ee",
  barAlt: "#f4a261",
  grid: "#e5e5e5",
  text: "#222",
  faint: "#999",
};

export function fmt(v: number, digits = 2): string {
  const s = v.toFixed(digits);
  return s === `-${(0).toFixed(digits)}` ? (0).toFixed(digits) : s;
}

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export interface Frame {
  x0: number;
  y0: number;
  w: number;
  h: number;
  xOf(v: number): number;
  yOf(v: number): number;
  xDomain: [number, number];
  yDomain: [number, number];
}

export function frame(
  yOffset: number,
  xDomain: [number, number],
  yDomain: [number, number],
  height = PANEL_H,
): Frame {
  const x0 = MARGIN.left;
  const y0 = yOffset + MARGIN.top;
  const w = PANEL_W - MARGIN.left - MARGIN.right;
  const h = height - MARGIN.top - MARGIN.bottom;
  const xs = scaleLinear().domain(xDomain).range([x0, x0 + w]);
  const ys = scaleLinear().domain(yDomain).range([y0 + h, y0]);
  return { x0, y0, w, h, xOf: (v) => xs(v), yOf: (v) => ys(v), xDomain, yDomain };
}

/** Pad [lo, hi] so flat series still get a visible band. */
export function padDomain(values: number[]): [number, number] {
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  if (lo === hi) {
    return [lo - 1, hi + 1];
  }
  const pad = (hi - lo) * 0.08;
  return [lo - pad, hi + pad];
}

export function axes(
  f: Frame,
  opts: { xLabel?: string; yLabel?: string; xTicks?: number[]; yTicks?: number[]; xDigits?: number; yDigits?: number } = {},
): string {
  const xTicks = opts.xTicks ?? ticks(f.xDomain[0], f.xDomain[1], 6);
  const yTicks = opts.yTicks ?? ticks(f.yDomain[0], f.yDomain[1], 5);
  const xd = opts.xDigits ?? 2;
  const yd = opts.yDigits ?? 2;
  let s = "";
  for (const v of yTicks) {
    const y = fmt(f.yOf(v), 1);
    s += `<line x1="${f.x0}" y1="${y}" x2="${f.x0 + f.w}" y2="${y}" stroke="${COLORS.grid}" stroke-width="0.5"/>\n`;
    s += `<text x="${f.x0 - 6}" y="${y}" font-size="9" fill="${COLORS.faint}" text-anchor="end" dominant-baseline="middle">${fmt(v, yd)}</text>\n`;
  }
  for (const v of xTicks) {
    const x = fmt(f.xOf(v), 1);
    const yb = f.y0 + f.h;
    s += `<line x1="${x}" y1="${yb}" x2="${x}" y2="${yb + 3}" stroke="${COLORS.faint}" stroke-width="0.5"/>\n`;
    s += `<text x="${x}" y="${yb + 13}" font-size="9" fill="${COLORS.faint}" text-anchor="middle">${fmt(v, xd)}</text>\n`;
  }
  s += `<rect x="${f.x0}" y="${f.y0}" width="${f.w}" height="${f.h}" fill="none" stroke="${COLORS.faint}" stroke-width="0.7"/>\n`;
  if (opts.xLabel) {
    s += `<text x="${f.x0 + f.w / 2}" y="${f.y0 + f.h + 28}" font-size="10" fill="${COLORS.text}" text-anchor="middle">${esc(opts.xLabel)}</text>\n`;
  }
  if (opts.yLabel) {
    const cx = f.x0 - 46;
    const cy = f.y0 + f.h / 2;
    s += `<text x="${cx}" y="${cy}" font-size="10" fill="${COLORS.text}" text-anchor="middle" transform="rotate(-90 ${cx} ${cy})">${esc(opts.yLabel)}</text>\n`;
  }
  return s;
}

export function panelTitle(f: Frame, text: string, subtitle = ""): string {
  let s = `<text x="${f.x0}" y="${f.y0 - 16}" font-size="11" font-weight="600" fill="${COLORS.text}">${esc(text)}</text>\n`;
  if (subtitle) {
    s += `<text x="${f.x0}" y="${f.y0 - 5}" font-size="8" fill="${COLORS.faint}">${esc(subtitle)}</text>\n`;
  }
  return s;
}

export function polyline(
  f: Frame,
  xs: number[],
  ys: number[],
  color: string,
  opts: { width?: number; dash?: string; opacity?: number; cls?: string } = {},
): string {
  const pts = xs.map((x, i) => `${fmt(f.xOf(x), 1)},${fmt(f.yOf(ys[i] ?? 0), 1)}`).join(" ");
  const dash = opts.dash ? ` stroke-dasharray="${opts.dash}"` : "";
  const opacity = opts.opacity !== undefined ? ` opacity="${opts.opacity}"` : "";
  const cls = opts.cls ? ` class="${opts.cls}"` : "";
  return `<polyline${cls} points="${pts}" fill="none" stroke="${color}" stroke-width="${opts.width ?? 1.2}"${dash}${opacity}/>\n`;
}

export function markers(
  f: Frame,
  xs: number[],
  ys: number[],
  color: string,
  cls: string,
  r = 2.4,
): string {
  let s = "";
  for (let i = 0; i < xs.length; i++) {
    const x = fmt(f.xOf(xs[i] ?? 0), 1);
    const y = fmt(f.yOf(ys[i] ?? 0), 1);
    s += `<circle class="${cls}" cx="${x}" cy="${y}" r="${r}" fill="${color}"/>\n`;
  }
  return s;
}

/** Histogram bars from shared bin edges; counts.length == edges.length - 1. */
export function bars(
  f: Frame,
  edges: number[],
  counts: number[],
  color: string,
  opts: { opacity?: number; cls?: string } = {},
): string {
  let s = "";
  const cls = opts.cls ?? "bar";
  const opacity = opts.opacity ?? 0.85;
  for (let i = 0; i < counts.length; i++) {
    const lo = edges[i] ?? 0;
    const hi = edges[i + 1] ?? lo;
    const x = f.xOf(lo);
    const wPx = Math.max(f.xOf(hi) - x - 0.5, 0.5);
    const yTop = f.yOf(counts[i] ?? 0);
    const hPx = f.y0 + f.h - yTop;
    s += `<rect class="${cls}" x="${fmt(x, 1)}" y="${fmt(yTop, 1)}" width="${fmt(wPx, 1)}" height="${fmt(Math.max(hPx, 0), 1)}" fill="${color}" opacity="${opacity}"/>\n`;
  }
  return s;
}

export function legend(f: Frame, entries: Array<{ label: string; color: string; dash?: string }>): string {
  let s = "";
  let x = f.x0 + f.w - 150;
  let y = f.y0 + 10;
  for (const e of entries) {
    const dash = e.dash ? ` stroke-dasharray="${e.dash}"` : "";
    s += `<line x1="${x}" y1="${y}" x2="${x + 16}" y2="${y}" stroke="${e.color}" stroke-width="1.6"${dash}/>\n`;
    s += `<text x="${x + 20}" y="${y + 3}" font-size="9" fill="${COLORS.text}">${esc(e.label)}</text>\n`;
    y += 12;
  }
  return s;
}

export function svgDoc(width: number, height: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
    `font-family="Helvetica, Arial, sans-serif">\n` +
    `<rect width="${width}" height="${height}" fill="#fff"/>\n` +
    body +
    "</svg>\n"
  );
}
