/**
 * Tiny deterministic SVG scene builder: linear scales, polylines, scatter
 * marks, axes and a legend. String assembly only, so identical inputs
 * yield byte-identical files.
 */

export interface Extent {
  min: number;
  max: number;
}

export function extentOf(values: Iterable<number>): Extent {
  let min = Infinity;
  let max = -Infinity;
  for (const v of values) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  if (!Number.isFinite(min) || !Number.isFinite(max)) {
    throw new Error("cannot compute the extent of an empty value set");
  }
  if (min === max) {
    // degenerate span: widen symmetrically so scales stay invertible
    const pad = Math.abs(min) > 0 ? Math.abs(min) * 0.05 : 1;
    return { min: min - pad, max: max + pad };
  }
  return { min, max };
}

export function padded(extent: Extent, fraction = 0.05): Extent {
  const span = extent.max - extent.min;
  return { min: extent.min - fraction * span, max: extent.max + fraction * span };
}

export class LinearScale {
  constructor(
    private readonly domain: Extent,
    private readonly range: Extent,
  ) {}

  map(value: number): number {
    const t = (value - this.domain.min) / (this.domain.max - this.domain.min);
    return this.range.min + t * (this.range.max - this.range.min);
  }

  ticks(count = 5): number[] {
    const out: number[] = [];
    for (let i = 0; i < count; i++) {
      out.push(this.domain.min + ((this.domain.max - this.domain.min) * i) / (count - 1));
    }
    return out;
  }
}

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
  "#bcbd22",
  "#e377c2",
];

const fmt = (value: number): string => {
  const rounded = Number(value.toPrecision(6));
  return Object.is(rounded, -0) ? "0" : String(rounded);
};

export interface Margins {
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export class Figure {
  private readonly parts: string[] = [];
  readonly plotX: Extent;
  readonly plotY: Extent;

  constructor(
    readonly width = 720,
    readonly height = 480,
    readonly margins: Margins = { left: 64, right: 16, top: 28, bottom: 44 },
  ) {
    this.plotX = { min: margins.left, max: width - margins.right };
    // SVG y grows downward; flip so larger data values sit higher
    this.plotY = { min: height - margins.bottom, max: margins.top };
  }

  add(fragment: string): void {
    this.parts.push(fragment);
  }

  axes(x: LinearScale, y: LinearScale, xLabel: string, yLabel: string, title: string): void {
    const { left, bottom, top } = this.margins;
    const x0 = left;
    const x1 = this.width - this.margins.right;
    const y0 = this.height - bottom;
    const y1 = top;
    this.add(
      `<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#444" stroke-width="1"/>`,
    );
    for (const tick of x.ticks()) {
      const px = fmt(x.map(tick));
      this.add(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 4}" stroke="#444"/>`);
      this.add(
        `<text x="${px}" y="${y0 + 18}" font-size="11" text-anchor="middle" fill="#222">${fmt(tick)}</text>`,
      );
    }
    for (const tick of y.ticks()) {
      const py = fmt(y.map(tick));
      this.add(`<line x1="${x0 - 4}" y1="${py}" x2="${x0}" y2="${py}" stroke="#444"/>`);
      this.add(
        `<text x="${x0 - 8}" y="${py}" font-size="11" text-anchor="end" dominant-baseline="middle" fill="#222">${fmt(tick)}</text>`,
      );
    }
    this.add(
      `<text x="${(x0 + x1) / 2}" y="${this.height - 8}" font-size="12" text-anchor="middle" fill="#222">${xLabel}</text>`,
    );
    this.add(
      `<text x="14" y="${(y0 + y1) / 2}" font-size="12" text-anchor="middle" fill="#222" transform="rotate(-90 14 ${(y0 + y1) / 2})">${yLabel}</text>`,
    );
    this.add(
      `<text x="${(x0 + x1) / 2}" y="${top - 10}" font-size="14" text-anchor="middle" fill="#000">${title}</text>`,
    );
  }

  polyline(
    points: Array<[number, number]>,
    x: LinearScale,
    y: LinearScale,
    stroke: string,
    width = 1.5,
    dash = "",
    close = false,
  ): void {
    const mapped = points.map(([px, py]) => `${fmt(x.map(px))},${fmt(y.map(py))}`).join(" ");
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    const tag = close ? "polygon" : "polyline";
    this.add(
      `<${tag} points="${mapped}" fill="none" stroke="${stroke}" stroke-width="${width}"${dashAttr}/>`,
    );
  }

  dots(
    points: Array<[number, number]>,
    x: LinearScale,
    y: LinearScale,
    fill: string,
    radius = 2.5,
  ): void {
    for (const [px, py] of points) {
      this.add(`<circle cx="${fmt(x.map(px))}" cy="${fmt(y.map(py))}" r="${radius}" fill="${fill}"/>`);
    }
  }

  legend(entries: Array<{ label: string; color: string; dash?: string }>): void {
    const x0 = this.margins.left + 10;
    let y = this.margins.top + 14;
    for (const entry of entries) {
      const dashAttr = entry.dash ? ` stroke-dasharray="${entry.dash}"` : "";
      this.add(
        `<line x1="${x0}" y1="${y - 4}" x2="${x0 + 22}" y2="${y - 4}" stroke="${entry.color}" stroke-width="2"${dashAttr}/>`,
      );
      this.add(`<text x="${x0 + 28}" y="${y}" font-size="11" fill="#222">${entry.label}</text>`);
      y += 15;
    }
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      `<rect width="${this.width}" height="${this.height}" fill="#ffffff"/>`,
      ...this.parts,
      `</svg>`,
      ``,
    ].join("\n");
  }
}
