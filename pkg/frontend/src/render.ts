/** DOM rendering. Pure build-from-view functions: every call re-renders
 * the container from the latest snapshot, so the screen always mirrors
 * the most recent server responses. */

import type { ChoiceLabel, UiSessionView } from "./controller.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function proposalCard(
  label: ChoiceLabel,
  values: number[],
  disabled: boolean,
  onChoose: (label: ChoiceLabel) => void,
): HTMLElement {
  const card = el("div", "proposal-card");
  card.dataset.label = label;
  card.appendChild(el("h3", "card-title", `Proposal ${label}`));
  const list = el("div", "param-list");
  values.forEach((v, i) => {
    const row = el("div", "param-row");
    row.appendChild(el("span", "param-name", `parameter ${i + 1}`));
    const bar = el("div", "param-bar");
    const fill = el("div", "param-fill");
    fill.style.width = `${(v * 100).toFixed(1)}%`;
    bar.appendChild(fill);
    row.appendChild(bar);
    row.appendChild(el("span", "param-value", v.toFixed(3)));
    list.appendChild(row);
  });
  card.appendChild(list);
  const btn = el("button", "choose-btn", `Prefer ${label}`);
  btn.disabled = disabled;
  btn.addEventListener("click", () => onChoose(label));
  card.appendChild(btn);
  return card;
}

export function sparkline(values: number[], width = 220, height = 48): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.setAttribute("class", "mi-sparkline");
  if (values.length === 0) return svg;
  const max = Math.max(...values, 1e-9);
  const step = values.length > 1 ? width / (values.length - 1) : 0;
  const pts = values.map((v, i) => {
    const x = values.length > 1 ? i * step : width / 2;
    const y = height - (v / max) * (height - 6) - 3;
    return [x, y] as const;
  });
  const path = document.createElementNS(SVG_NS, "path");
  path.setAttribute("d", pts.map(([x, y], i) => `${i === 0 ? "M" : "L"}${x.toFixed(1)},${y.toFixed(1)}`).join(" "));
  path.setAttribute("fill", "none");
  path.setAttribute("stroke", "currentColor");
  svg.appendChild(path);
  for (const [x, y] of pts) {
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", x.toFixed(1));
    dot.setAttribute("cy", y.toFixed(1));
    dot.setAttribute("r", "2");
    dot.setAttribute("class", "mi-point");
    svg.appendChild(dot);
  }
  return svg;
}

export function rsuGauge(rsu: number | null): HTMLElement {
  const wrap = el("div", "rsu-gauge");
  wrap.appendChild(el("span", "gauge-label", "RSU"));
  const value = rsu === null ? "—" : rsu.toFixed(3);
  const reading = el("span", "gauge-value", value);
  reading.dataset.rsu = rsu === null ? "" : String(rsu);
  wrap.appendChild(reading);
  const bar = el("div", "gauge-bar");
  const fill = el("div", "gauge-fill");
  fill.style.width = rsu === null ? "0%" : `${Math.min(rsu, 1) * 100}%`;
  bar.appendChild(fill);
  wrap.appendChild(bar);
  return wrap;
}

/** 2x2 symmetric eigendecomposition for the 1-sigma ellipse. */
function ellipseParams(cov: number[][]): { rx: number; ry: number; angleDeg: number } {
  const a = cov[0]?.[0] ?? 0;
  const b = cov[0]?.[1] ?? 0;
  const c = cov[1]?.[1] ?? 0;
  const tr = a + c;
  const det = a * c - b * b;
  const disc = Math.sqrt(Math.max(tr * tr / 4 - det, 0));
  const l1 = tr / 2 + disc;
  const l2 = tr / 2 - disc;
  const angle = Math.abs(b) < 1e-12 ? (a >= c ? 0 : Math.PI / 2) : Math.atan2(l1 - a, b);
  return {
    rx: Math.sqrt(Math.max(l1, 0)),
    ry: Math.sqrt(Math.max(l2, 0)),
    angleDeg: (angle * 180) / Math.PI,
  };
}

/** Posterior mean + 1-sigma ellipse in the location plane (D=2 only). */
export function posteriorPlot(mean: number[], cov: number[][], size = 180): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(size));
  svg.setAttribute("height", String(size));
  svg.setAttribute("class", "posterior-plot");
  const span = 3.0; // alpha-plane window [-3, 3]
  const toPx = (v: number) => ((v + span) / (2 * span)) * size;
  const axes = document.createElementNS(SVG_NS, "path");
  axes.setAttribute(
    "d",
    `M${toPx(-span)},${toPx(0)} H${toPx(span)} M${toPx(0)},${toPx(-span)} V${toPx(span)}`,
  );
  axes.setAttribute("stroke", "#ccc");
  axes.setAttribute("fill", "none");
  svg.appendChild(axes);
  const [mx, my] = [mean[0] ?? 0, mean[1] ?? 0];
  const { rx, ry, angleDeg } = ellipseParams(cov);
  const scale = size / (2 * span);
  const ell = document.createElementNS(SVG_NS, "ellipse");
  ell.setAttribute("cx", toPx(mx).toFixed(1));
  ell.setAttribute("cy", toPx(-my).toFixed(1));
  ell.setAttribute("rx", (rx * scale).toFixed(1));
  ell.setAttribute("ry", (ry * scale).toFixed(1));
  ell.setAttribute("transform", `rotate(${(-angleDeg).toFixed(1)} ${toPx(mx).toFixed(1)} ${toPx(-my).toFixed(1)})`);
  ell.setAttribute("class", "posterior-ellipse");
  ell.setAttribute("fill", "none");
  ell.setAttribute("stroke", "currentColor");
  svg.appendChild(ell);
  const dot = document.createElementNS(SVG_NS, "circle");
  dot.setAttribute("cx", toPx(mx).toFixed(1));
  dot.setAttribute("cy", toPx(-my).toFixed(1));
  dot.setAttribute("r", "3");
  dot.setAttribute("class", "posterior-mean");
  svg.appendChild(dot);
  return svg;
}

export interface RenderHandlers {
  onChoose: (label: ChoiceLabel) => void;
}

export function renderApp(root: HTMLElement, view: UiSessionView, handlers: RenderHandlers): void {
  root.textContent = "";
  const app = el("div", "elicit-app");

  if (view.banner) {
    const banner = el("div", "error-banner", view.banner);
    banner.setAttribute("role", "alert");
    app.appendChild(banner);
  }
  if (view.stale) {
    app.appendChild(el("div", "stale-badge", "metrics stale"));
  }

  if (view.sessionId === null) {
    app.appendChild(el("p", "hint", "No session. Configure and start one."));
    root.appendChild(app);
    return;
  }

  const header = el("div", "session-header");
  header.appendChild(el("span", "session-id", `session ${view.sessionId.slice(0, 8)}`));
  header.appendChild(
    el("span", "step-counter", `responses: ${view.responsesAccepted}`),
  );
  app.appendChild(header);

  const terminal = view.status !== null && view.status !== "awaiting_response";
  if (terminal) {
    app.appendChild(el("div", "terminal-banner", `Session finished: ${view.status}`));
  }

  if (view.cardA && view.cardB) {
    const pair = el("div", "proposal-pair");
    pair.appendChild(el("div", "trial-step", `trial ${view.trialStep}`));
    const cards: Record<ChoiceLabel, HTMLElement> = {
      A: proposalCard("A", view.cardA, terminal || view.busy, handlers.onChoose),
      B: proposalCard("B", view.cardB, terminal || view.busy, handlers.onChoose),
    };
    for (const label of view.screenOrder) pair.appendChild(cards[label]);
    app.appendChild(pair);
  }

  if (view.thetaEstimate) {
    const est = el("div", "estimate");
    est.appendChild(el("span", "estimate-label", "current estimate"));
    est.appendChild(
      el("span", "estimate-value", view.thetaEstimate.map((v) => v.toFixed(3)).join(", ")),
    );
    app.appendChild(est);
  }

  const metrics = el("div", "metrics-panel");
  metrics.appendChild(rsuGauge(view.rsu));
  metrics.appendChild(sparkline(view.miTrace));
  if (view.alphaMean.length === 2) {
    metrics.appendChild(posteriorPlot(view.alphaMean, view.alphaCov));
  }
  app.appendChild(metrics);

  root.appendChild(app);
}
