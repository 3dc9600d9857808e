// Genome previews for a pending card: a top-down slice drawn from the slice
// endpoint's enabled-cell list, and a bar per allele.

import type { GenomePayload, SlicePayload } from "./api.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export function renderSlice(container: HTMLElement, payload: SlicePayload): void {
  container.textContent = "";
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${payload.gridSize} ${payload.gridSize}`);
  svg.setAttribute("class", "slice-preview");
  for (const [x, y] of payload.cells) {
    const rect = document.createElementNS(SVG_NS, "rect");
    rect.setAttribute("x", String(x));
    // grid y grows upward, SVG y grows downward
    rect.setAttribute("y", String(payload.gridSize - 1 - y));
    rect.setAttribute("width", "1");
    rect.setAttribute("height", "1");
    rect.setAttribute("class", "slice-cell");
    svg.appendChild(rect);
  }
  container.appendChild(svg);
}

const ALLELE_MAX = 42;
const BAR_W = 12;
const BAR_GAP = 3;
const BAR_H = 48;

export function renderAlleleBars(container: HTMLElement, genome: GenomePayload): void {
  container.textContent = "";
  const alleles = genome.z === null ? genome.base : [...genome.base, ...genome.z];
  const width = alleles.length * (BAR_W + BAR_GAP);
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${BAR_H}`);
  svg.setAttribute("class", "allele-bars");
  alleles.forEach((value, i) => {
    const h = (Math.abs(value) / ALLELE_MAX) * (BAR_H - 2);
    const bar = document.createElementNS(SVG_NS, "rect");
    bar.setAttribute("x", String(i * (BAR_W + BAR_GAP)));
    bar.setAttribute("y", String(BAR_H - h));
    bar.setAttribute("width", String(BAR_W));
    bar.setAttribute("height", String(h));
    bar.setAttribute("class", i < genome.base.length ? "allele-bar" : "allele-bar z-allele");
    bar.setAttribute("data-value", String(value));
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `allele ${i}: ${value}`;
    bar.appendChild(title);
    svg.appendChild(bar);
  });
  container.appendChild(svg);
}
