import { appendixB } from "./figures/appendixB.js";
import { fig2 } from "./figures/fig2.js";
import { fig4 } from "./figures/fig4.js";
import { fig5 } from "./figures/fig5.js";
import { fig6 } from "./figures/fig6.js";
import { fig7 } from "./figures/fig7.js";

const FIGURES: Record<string, (dir: string, band: number) => string> = {
  fig2,
  fig4,
  fig5,
  fig6,
  fig7,
  appendixB,
};

export const figureIds = Object.keys(FIGURES);

export function renderFigure(id: string, dir: string, band = 5): string {
  const figure = FIGURES[id];
  if (!figure) {
    throw new Error(`unknown figure id "${id}"; expected one of: ${figureIds.join(", ")}`);
  }
  if (!(band > 0) || !Number.isFinite(band)) {
    throw new Error(`band must be a positive number, got ${band}`);
  }
  return figure(dir, band);
}
