/** Minimal deterministic SVG emitter: scales, axes, paths, markers. */

export function fmt(x: number): string {
  if (!Number.isFinite(x)) return '0';
  const s = x.toPrecision(6);
  // strip trailing zeros without losing exponent notation
  return String(Number(s));
}

export interface LinearScale {
  (x: number): number;
  ticks: number[];
}

export function linearScale(domain: [number, number], range: [number, number], tickCount = 5): LinearScale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const scale = ((x: number) => r0 + ((x - d0) / span) * (r1 - r0)) as LinearScale;
  const step = span / Math.max(1, tickCount - 1);
  scale.ticks = Array.from({ length: tickCount }, (_, i) => d0 + i * step);
  return scale;
}

/** Log10 scale with decade ticks; the domain is clamped to positive values. */
export function logScale(domain: [number, number], range: [number, number]): LinearScale {
  const lo = Math.max(domain[0], 1e-12);
  const hi = Math.max(domain[1], lo * 10);
  const [r0, r1] = range;
  const l0 = Math.log10(lo);
  const l1 = Math.log10(hi);
  const span = l1 - l0 || 1;
  const scale = ((x: number) =>
    r0 + ((Math.log10(Math.max(x, 1e-12)) - l0) / span) * (r1 - r0)) as LinearScale;
  const ticks: number[] = [];
  for (let e = Math.floor(l0); e <= Math.ceil(l1); e += 1) ticks.push(10 ** e);
  scale.ticks = ticks;
  return scale;
}

export const PALETTE = ['#1f77b4', '#d62728', '#2ca02c', '#ff7f0e', '#9467bd', '#8c564b'];

export class SvgDocument {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  add(fragment: string): void {
    this.parts.push(fragment);
  }

  openGroup(attrs: Record<string, string>): void {
    const rendered = Object.entries(attrs)
      .map(([k, v]) => `${k}="${v}"`)
      .join(' ');
    this.parts.push(`<g ${rendered}>`);
  }

  closeGroup(): void {
    this.parts.push('</g>');
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = '#333', width = 1): void {
    this.add(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  polyline(points: [number, number][], stroke: string, width = 1.5): void {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(' ');
    this.add(`<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`);
  }

  polygon(points: [number, number][], fill: string, opacity = 0.25): void {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(' ');
    this.add(`<polygon points="${pts}" fill="${fill}" fill-opacity="${fmt(opacity)}" stroke="none"/>`);
  }

  circle(cx: number, cy: number, r: number, fill: string): void {
    this.add(`<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" fill="${fill}"/>`);
  }

  text(x: number, y: number, content: string, anchor = 'middle', size = 11): void {
    this.add(
      `<text x="${fmt(x)}" y="${fmt(y)}" text-anchor="${anchor}" font-family="sans-serif" font-size="${size}">${escapeXml(content)}</text>`,
    );
  }

  render(): string {
    return [
      '<?xml version="1.0" encoding="UTF-8"?>',
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      ...this.parts,
      '</svg>',
    ].join('\n');
  }
}

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}
