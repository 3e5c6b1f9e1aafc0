import { Scale, linearScale, tickLabel, ticks } from "./scale.js";
import { esc, fmt } from "./svg.js";

export interface PanelOptions {
  x: number;
  y: number;
  width: number;
  height: number;
  xDomain: [number, number];
  yDomain: [number, number];
  xLabel?: string;
  yLabel?: string;
  title?: string;
  mini?: boolean;
}

export interface Panel {
  sx: Scale;
  sy: Scale;
  wrap: (marks: string) => string;
}

// Maps data coordinates into the document and wraps marks with frame, axes,
// and labels; callers draw marks through sx/sy in document coordinates.
export function makePanel(opts: PanelOptions): Panel {
  const mini = opts.mini ?? false;
  const margin = mini
    ? { left: 34, right: 8, top: opts.title ? 18 : 8, bottom: 24 }
    : { left: 52, right: 12, top: opts.title ? 26 : 12, bottom: 38 };
  const fontSize = mini ? 8 : 11;
  const tickCount = mini ? 3 : 5;

  const plotLeft = opts.x + margin.left;
  const plotRight = opts.x + opts.width - margin.right;
  const plotTop = opts.y + margin.top;
  const plotBottom = opts.y + opts.height - margin.bottom;

  const sx = linearScale(opts.xDomain, [plotLeft, plotRight]);
  const sy = linearScale(opts.yDomain, [plotBottom, plotTop]);

  const parts: string[] = [];
  parts.push(
    `<rect x="${fmt(plotLeft)}" y="${fmt(plotTop)}" width="${fmt(plotRight - plotLeft)}" ` +
      `height="${fmt(plotBottom - plotTop)}" fill="none" stroke="#444" stroke-width="1"/>`,
  );

  for (const v of ticks(opts.xDomain[0], opts.xDomain[1], tickCount)) {
    const px = sx(v);
    parts.push(
      `<line x1="${fmt(px)}" y1="${fmt(plotBottom)}" x2="${fmt(px)}" y2="${fmt(plotBottom + 4)}" stroke="#444"/>`,
    );
    parts.push(
      `<text x="${fmt(px)}" y="${fmt(plotBottom + 5 + fontSize)}" font-size="${fontSize}" ` +
        `text-anchor="middle" fill="#222">${esc(tickLabel(v))}</text>`,
    );
  }
  for (const v of ticks(opts.yDomain[0], opts.yDomain[1], tickCount)) {
    const py = sy(v);
    parts.push(
      `<line x1="${fmt(plotLeft - 4)}" y1="${fmt(py)}" x2="${fmt(plotLeft)}" y2="${fmt(py)}" stroke="#444"/>`,
    );
    parts.push(
      `<text x="${fmt(plotLeft - 6)}" y="${fmt(py + fontSize * 0.35)}" font-size="${fontSize}" ` +
        `text-anchor="end" fill="#222">${esc(tickLabel(v))}</text>`,
    );
  }

  if (opts.title) {
    parts.push(
      `<text x="${fmt((plotLeft + plotRight) / 2)}" y="${fmt(opts.y + margin.top - 6)}" ` +
        `font-size="${fontSize + 1}" text-anchor="middle" fill="#000">${esc(opts.title)}</text>`,
    );
  }
  if (opts.xLabel) {
    parts.push(
      `<text x="${fmt((plotLeft + plotRight) / 2)}" y="${fmt(opts.y + opts.height - 4)}" ` +
        `font-size="${fontSize}" text-anchor="middle" fill="#000">${esc(opts.xLabel)}</text>`,
    );
  }
  if (opts.yLabel) {
    const cx = opts.x + (mini ? 9 : 13);
    const cy = (plotTop + plotBottom) / 2;
    parts.push(
      `<text x="${fmt(cx)}" y="${fmt(cy)}" font-size="${fontSize}" text-anchor="middle" ` +
        `transform="rotate(-90 ${fmt(cx)} ${fmt(cy)})" fill="#000">${esc(opts.yLabel)}</text>`,
    );
  }

  const frame = parts.join("\n");
  return {
    sx,
    sy,
    wrap: (marks: string) => `<g class="panel">\n${frame}\n${marks}\n</g>`,
  };
}
