// String-built SVG with fixed-precision coordinates so identical inputs
// produce identical bytes on every platform.

export function fmt(value: number): string {
  const s = value.toFixed(2).replace(/\.?0+$/, "");
  return s === "-0" ? "0" : s;
}

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function pointsAttr(points: Array<[number, number]>): string {
  return points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
}

export function polyline(points: Array<[number, number]>, attrs: string): string {
  return `<polyline points="${pointsAttr(points)}" fill="none" ${attrs}/>`;
}

export function polygon(points: Array<[number, number]>, attrs: string): string {
  return `<polygon points="${pointsAttr(points)}" ${attrs}/>`;
}

export function circle(cx: number, cy: number, r: number, attrs: string): string {
  return `<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" ${attrs}/>`;
}

export function text(x: number, y: number, label: string, attrs: string): string {
  return `<text x="${fmt(x)}" y="${fmt(y)}" ${attrs}>${esc(label)}</text>`;
}

export function group(transform: string, body: string, attrs = ""): string {
  return `<g transform="${transform}"${attrs ? " " + attrs : ""}>${body}</g>`;
}

export function svgDocument(width: number, height: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="sans-serif">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n` +
    body +
    `\n</svg>\n`
  );
}
