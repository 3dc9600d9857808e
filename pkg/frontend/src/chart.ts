// Hand-rolled SVG convergence chart. The series is drawn exactly as the
// service reports it; scaling maps payload values onto pixels and every point
// carries its payload numbers in data attributes.

import type { HistoryPoint } from "./api.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface ChartLabels {
  mode: string;
  generation: number;
}

const WIDTH = 640;
const HEIGHT = 240;
const PAD = { left: 56, right: 16, top: 28, bottom: 30 };

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) el.setAttribute(key, value);
  return el;
}

export function renderConvergence(
  container: HTMLElement,
  series: HistoryPoint[],
  labels: ChartLabels,
): void {
  container.textContent = "";

  if (series.length === 0) {
    const placeholder = document.createElement("p");
    placeholder.className = "chart-placeholder";
    placeholder.textContent = "No evaluations yet; the chart appears once the first population is scored.";
    container.appendChild(placeholder);
    return;
  }

  const xs = series.map((p) => p.evaluations);
  const ys = series.map((p) => p.bestFitness);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const xSpan = xMax - xMin || 1;
  const ySpan = yMax - yMin || 1;

  const plotW = WIDTH - PAD.left - PAD.right;
  const plotH = HEIGHT - PAD.top - PAD.bottom;
  const toX = (v: number) => PAD.left + ((v - xMin) / xSpan) * plotW;
  const toY = (v: number) => PAD.top + plotH - ((v - yMin) / ySpan) * plotH;

  const svg = svgEl("svg", {
    viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
    class: "convergence-chart",
    role: "img",
  });

  svg.appendChild(svgEl("line", {
    x1: String(PAD.left), y1: String(PAD.top + plotH),
    x2: String(PAD.left + plotW), y2: String(PAD.top + plotH),
    class: "axis",
  }));
  svg.appendChild(svgEl("line", {
    x1: String(PAD.left), y1: String(PAD.top),
    x2: String(PAD.left), y2: String(PAD.top + plotH),
    class: "axis",
  }));

  const axisLabels: [string, Record<string, string>][] = [
    [String(xMin), { x: String(PAD.left), y: String(HEIGHT - 8), "text-anchor": "start" }],
    [String(xMax), { x: String(PAD.left + plotW), y: String(HEIGHT - 8), "text-anchor": "end" }],
    [String(yMin), { x: String(PAD.left - 6), y: String(PAD.top + plotH), "text-anchor": "end" }],
    [String(yMax), { x: String(PAD.left - 6), y: String(PAD.top + 10), "text-anchor": "end" }],
  ];
  for (const [text, attrs] of axisLabels) {
    const label = svgEl("text", { ...attrs, class: "axis-label" });
    label.textContent = text;
    svg.appendChild(label);
  }

  const line = svgEl("polyline", {
    points: series.map((p) => `${toX(p.evaluations)},${toY(p.bestFitness)}`).join(" "),
    class: "series-line",
    fill: "none",
  });
  svg.appendChild(line);

  for (const point of series) {
    svg.appendChild(svgEl("circle", {
      cx: String(toX(point.evaluations)),
      cy: String(toY(point.bestFitness)),
      r: "2.5",
      class: "chart-point",
      "data-evaluations": String(point.evaluations),
      "data-best-fitness": String(point.bestFitness),
    }));
  }

  const caption = svgEl("text", {
    x: String(PAD.left),
    y: "16",
    class: "chart-caption",
  });
  caption.textContent = `${labels.mode} mode, generation ${labels.generation}`;
  svg.appendChild(caption);

  container.appendChild(svg);
}
