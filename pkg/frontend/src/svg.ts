/** Minimal deterministic SVG building blocks: fixed style, no timestamps, no ids. */

export function fmt(v: number): string {
  // fixed two-decimal screen coordinates keep output bytes stable
  return v.toFixed(2);
}

export function svgDocument(width: number, height: number, body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff"/>`,
    ...body,
    "</svg>",
    "",
  ].join("\n");
}

export function line(x1: number, y1: number, x2: number, y2: number, stroke = "#333333", width = 1): string {
  return `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${width}"/>`;
}

export function polyline(points: Array<[number, number]>, stroke: string, series: string, width = 1.5): string {
  const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  return `<polyline data-series="${series}" points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`;
}

export function polygon(points: Array<[number, number]>, fill: string): string {
  const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  return `<polygon points="${pts}" fill="${fill}" stroke="#ffffff" stroke-width="0.3"/>`;
}

export function text(x: number, y: number, content: string, size = 11, anchor = "start"): string {
  return `<text x="${fmt(x)}" y="${fmt(y)}" font-family="Helvetica, Arial, sans-serif" font-size="${size}" text-anchor="${anchor}" fill="#222222">${escapeXml(content)}</text>`;
}

export function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

/** Blue-to-red ramp over [0, 1]; linear in RGB, deterministic. */
export function colorRamp(t: number): string {
  const clamped = Math.max(0, Math.min(1, t));
  const r = Math.round(40 + 200 * clamped);
  const g = Math.round(60 + 60 * (1 - Math.abs(2 * clamped - 1)));
  const b = Math.round(240 - 200 * clamped);
  return `rgb(${r},${g},${b})`;
}
