/**
 * The six figure renderers.
 *
 * fig1  taker behavior panels, one per PnL-weight sweep key
 * fig2  distribution of the normalized LP price tweak per sweep key
 * fig3  flow attracted per quote, by tweak bucket and taker kind
 * fig4  episode PnL decomposition (spread vs inventory) per agent kind
 * fig5  skew intensity vs connection probability
 * fig6  skew intensity vs LP risk aversion
 *
 * Renderers only draw numbers already present in summary.json; the paired
 * rows.csv is schema-checked so every column a figure refers to is known to
 * exist in the documented layout.
 */

import {
  Experiment,
  PointSummary,
  RowColumn,
  SchemaError,
  need,
  sweepValue,
} from "./schema.js";
import {
  COLORS,
  PANEL_H,
  PANEL_W,
  axes,
  bars,
  fmt,
  frame,
  legend,
  markers,
  padDomain,
  panelTitle,
  polyline,
  svgDoc,
} from "./svg.js";

export interface Figure {
  id: string;
  title: string;
  /** sweep-key family this figure needs, or null to take any experiment */
  wants: string | null;
  /** rows.csv columns the figure's numbers come from */
  columns: RowColumn[];
  render(exp: Experiment): string;
}

function point(exp: Experiment, key: string): PointSummary {
  return need(exp.summary.points[key], `points["${key}"]`);
}

// -- fig1: behavior panels ------------------------------------------------------

function renderBehavior(exp: Experiment): string {
  const keys = exp.summary.sweep_keys;
  let body = "";
  keys.forEach((key, i) => {
    const behavior = need(point(exp, key).lt_behavior, `points["${key}"].lt_behavior`);
    const steps = behavior.mids.map((_, t) => t);
    const f = frame(i * PANEL_H, [0, Math.max(steps.length - 1, 1)], padDomain(behavior.mids));
    body += `<g class="panel">\n`;
    body += panelTitle(f, key, `one evaluation episode, ${behavior.buys.length} buys / ${behavior.sells.length} sells`);
    body += axes(f, { xLabel: i === keys.length - 1 ? "step" : undefined, yLabel: "mid", xDigits: 0 });
    body += polyline(f, steps, behavior.mids, COLORS.line, { width: 1.0 });
    body += markers(f, behavior.buys, behavior.buys.map((t) => behavior.mids[t] ?? 0), COLORS.buy, "buy");
    body += markers(f, behavior.sells, behavior.sells.map((t) => behavior.mids[t] ?? 0), COLORS.sell, "sell");
    body += legend(f, [
      { label: "buy", color: COLORS.buy },
      { label: "sell", color: COLORS.sell },
    ]);
    body += "</g>\n";
  });
  return svgDoc(PANEL_W, PANEL_H * keys.length, body);
}

// -- fig2: tweak distribution -----------------------------------------------------

function renderTweakHist(exp: Experiment): string {
  const keys = exp.summary.sweep_keys;
  let body = "";
  keys.forEach((key, i) => {
    const p = point(exp, key);
    const hist = need(p.tweak_hist, `points["${key}"].tweak_hist`);
    const yMax = Math.max(...hist.eps.counts, 1);
    const f = frame(i * PANEL_H, [hist.eps.edges[0] ?? -1.5, hist.eps.edges[hist.eps.edges.length - 1] ?? 1.5], [0, yMax * 1.05]);
    const meanEps = p.mean_eps;
    body += `<g class="panel">\n`;
    body += panelTitle(f, key, meanEps !== undefined ? `mean eps ${fmt(meanEps, 3)} over ${hist.n_rows} quotes` : "");
    body += axes(f, { xLabel: i === keys.length - 1 ? "normalized tweak eps" : undefined, yLabel: "quotes", yDigits: 0 });
    body += bars(f, hist.eps.edges, hist.eps.counts, COLORS.bar);
    if (meanEps !== undefined) {
      const x = fmt(f.xOf(meanEps), 1);
      body += `<line x1="${x}" y1="${f.y0}" x2="${x}" y2="${f.y0 + f.h}" stroke="${COLORS.sell}" stroke-width="1" stroke-dasharray="4,3"/>\n`;
    }
    body += "</g>\n";
  });
  return svgDoc(PANEL_W, PANEL_H * keys.length, body);
}

// -- fig3: flow by tweak bucket ----------------------------------------------------

function renderFlowByTweak(exp: Experiment): string {
  const keys = exp.summary.sweep_keys;
  let body = "";
  keys.forEach((key, i) => {
    const flow = need(point(exp, key).flow_by_tweak, `points["${key}"].flow_by_tweak`);
    const centers = flow.lp_steps.map((_, b) => ((flow.edges[b] ?? 0) + (flow.edges[b + 1] ?? 0)) / 2);
    const kinds = Object.keys(flow.mean).sort();
    const all = kinds.flatMap((k) => flow.mean[k] ?? []);
    const f = frame(i * PANEL_H, [flow.edges[0] ?? -1.5, flow.edges[flow.edges.length - 1] ?? 1.5], [0, Math.max(...all, 0.1) * 1.1]);
    body += `<g class="panel">\n`;
    body += panelTitle(f, key, "mean units attracted per quote, by taker kind");
    body += axes(f, { xLabel: i === keys.length - 1 ? "normalized tweak eps" : undefined, yLabel: "flow per quote" });
    kinds.forEach((kind, j) => {
      body += polyline(f, centers, flow.mean[kind] ?? [], j === 0 ? COLORS.line : COLORS.sell, {
        dash: j === 0 ? undefined : "5,3",
        cls: "kind-line",
      });
    });
    body += legend(f, kinds.map((kind, j) => ({
      label: kind,
      color: j === 0 ? COLORS.line : COLORS.sell,
      dash: j === 0 ? undefined : "5,3",
    })));
    body += "</g>\n";
  });
  return svgDoc(PANEL_W, PANEL_H * keys.length, body);
}

// -- fig4: PnL decomposition --------------------------------------------------------

function renderPnlDecomposition(exp: Experiment): string {
  const keys = exp.summary.sweep_keys;
  const panels: string[] = [];
  for (const key of keys) {
    const byKind = need(point(exp, key).pnl_by_kind, `points["${key}"].pnl_by_kind`);
    for (const kind of Object.keys(byKind).sort()) {
      const entry = byKind[kind];
      if (entry === undefined) {
        continue;
      }
      const i = panels.length;
      const edges = entry.spread.hist.edges;
      const yMax = Math.max(...entry.spread.hist.counts, ...entry.inventory.hist.counts, 1);
      const f = frame(i * PANEL_H, [edges[0] ?? 0, edges[edges.length - 1] ?? 1], [0, yMax * 1.05]);
      let body = `<g class="panel">\n`;
      body += panelTitle(
        f,
        `${key}, ${kind}`,
        `spread ${fmt(entry.spread.mean, 3)} +/- ${fmt(entry.spread.std, 3)}; ` +
          `inventory ${fmt(entry.inventory.mean, 3)} +/- ${fmt(entry.inventory.std, 3)}; ` +
          `${entry.n_episodes} episodes`,
      );
      body += axes(f, { xLabel: "episode pnl", yLabel: "episodes", yDigits: 0 });
      body += bars(f, edges, entry.spread.hist.counts, COLORS.bar, { opacity: 0.65, cls: "spread-bar" });
      body += bars(f, entry.inventory.hist.edges, entry.inventory.hist.counts, COLORS.barAlt, {
        opacity: 0.55,
        cls: "inventory-bar",
      });
      body += legend(f, [
        { label: "spread pnl", color: COLORS.bar },
        { label: "inventory pnl", color: COLORS.barAlt },
      ]);
      body += "</g>\n";
      panels.push(body);
    }
  }
  return svgDoc(PANEL_W, PANEL_H * Math.max(panels.length, 1), panels.join(""));
}

// -- fig5/fig6: skew intensity across a sweep ------------------------------------------

function renderSkewSweep(exp: Experiment, xLabel: string): string {
  const keys = exp.summary.sweep_keys;
  const xs = keys.map(sweepValue);
  const pooled = keys.map((key) =>
    need(point(exp, key).skew_intensity, `points["${key}"].skew_intensity`),
  );
  const seeds = exp.summary.seeds.map(String);
  const perSeed = seeds.map((seed) =>
    keys.map((key) => {
      const seeded = need(point(exp, key).per_seed, `points["${key}"].per_seed`);
      return need(seeded[seed], `points["${key}"].per_seed["${seed}"]`).skew_intensity ?? 0;
    }),
  );
  const allVals = pooled.concat(perSeed.flat());
  const f = frame(0, padDomain(xs), padDomain(allVals), PANEL_H + 40);
  let body = `<g class="panel">\n`;
  body += panelTitle(f, `skew intensity vs ${xLabel}`, `${seeds.length} seeds, pooled line in front`);
  body += axes(f, { xLabel, yLabel: "mean |eps_asym|", yDigits: 3 });
  perSeed.forEach((series, i) => {
    body += polyline(f, xs, series, COLORS.faint, { width: 0.8, opacity: 0.7, cls: `seed-${seeds[i]}` });
  });
  body += polyline(f, xs, pooled, COLORS.line, { width: 1.8, cls: "pooled" });
  body += markers(f, xs, pooled, COLORS.line, "pooled-pt", 2.8);
  body += "</g>\n";
  return svgDoc(PANEL_W, PANEL_H + 40, body);
}

// -- registry -----------------------------------------------------------------------

export const FIGURES: Figure[] = [
  {
    id: "fig1",
    title: "taker behavior spectrum",
    wants: "w",
    columns: ["step", "lt_choice"],
    render: renderBehavior,
  },
  {
    id: "fig2",
    title: "price tweak distribution",
    wants: null,
    columns: ["eps", "eps_sym", "eps_asym"],
    render: renderTweakHist,
  },
  {
    id: "fig3",
    title: "flow by tweak",
    wants: null,
    columns: ["eps", "kind", "lt_choice", "counterparty"],
    render: renderFlowByTweak,
  },
  {
    id: "fig4",
    title: "pnl decomposition",
    wants: null,
    columns: ["kind", "d_spread_pnl", "d_inventory_pnl"],
    render: renderPnlDecomposition,
  },
  {
    id: "fig5",
    title: "skew vs connectivity",
    wants: "p",
    columns: ["eps_asym", "inventory"],
    render: (exp) => renderSkewSweep(exp, "connection probability"),
  },
  {
    id: "fig6",
    title: "skew vs risk aversion",
    wants: "gamma",
    columns: ["eps_asym", "inventory"],
    render: (exp) => renderSkewSweep(exp, "risk aversion gamma"),
  },
];

/** Fallback order for figures that accept any experiment. */
const PREFIX_PRIORITY = ["n_pnl", "p", "gamma", "w"];

export function pickExperiment(figure: Figure, experiments: Experiment[]): Experiment {
  if (figure.wants !== null) {
    const match = experiments.find((e) => e.prefix === figure.wants);
    if (match === undefined) {
      const seen = experiments.map((e) => e.prefix).join(", ");
      throw new SchemaError(
        `${figure.id} needs an experiment with "${figure.wants}=..." sweep keys; found only: ${seen}`,
      );
    }
    return match;
  }
  for (const prefix of PREFIX_PRIORITY) {
    const match = experiments.find((e) => e.prefix === prefix);
    if (match !== undefined) {
      return match;
    }
  }
  const first = experiments[0];
  if (first === undefined) {
    throw new SchemaError(`${figure.id}: no experiments to draw from`);
  }
  return first;
}

/** Every column a figure references must exist in the experiment's rows.csv. */
export function requireColumns(figure: Figure, exp: Experiment): void {
  const missing = figure.columns.filter((c) => !exp.rowsHeader.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(
      `${figure.id}: rows.csv in ${exp.dir} is missing column(s): ${missing.join(", ")}`,
    );
  }
}
