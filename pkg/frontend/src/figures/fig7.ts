import { join } from "node:path";
import { Row, maybeNum, num, readCsv, uniqueInOrder } from "../csv.js";
import { extent, padDomain } from "../scale.js";
import { circle, polygon, polyline, svgDocument } from "../svg.js";
import { makePanel } from "../panel.js";

const PANEL_W = 320;
const PANEL_H = 380;

interface Arm {
  ratio: number;
  mean: number | null;
  se: number | null;
}

// Arms where no replicate converged have empty means; they split the curve
// into segments instead of being interpolated over.
function segments(arms: Arm[]): Arm[][] {
  const out: Arm[][] = [];
  let current: Arm[] = [];
  for (const arm of arms) {
    if (arm.mean === null) {
      if (current.length > 0) out.push(current);
      current = [];
    } else {
      current.push(arm);
    }
  }
  if (current.length > 0) out.push(current);
  return out;
}

// Convergence time against separation, one panel per mean geometry.
export function fig7(dir: string, band: number): string {
  const path = join(dir, "tstar_summary.csv");
  const rows = readCsv(path, [
    "geometry",
    "delta_mu_over_sigma",
    "mean_t_star",
    "se",
    "n_converged",
    "replicates",
  ]);
  const geometries = uniqueInOrder(rows.map((r) => r.geometry));

  const panels = geometries.map((geometry, index) => {
    const armRows = rows.filter((r) => r.geometry === geometry);
    const arms: Arm[] = armRows
      .map((r: Row) => ({
        ratio: num(r, "delta_mu_over_sigma", path),
        mean: maybeNum(r, "mean_t_star", path),
        se: maybeNum(r, "se", path),
      }))
      .sort((a, b) => a.ratio - b.ratio);

    const present = arms.filter((a) => a.mean !== null);
    const yValues = present.flatMap((a) => [
      a.mean! - band * (a.se ?? 0),
      a.mean! + band * (a.se ?? 0),
    ]);
    const panel = makePanel({
      x: index * PANEL_W,
      y: 0,
      width: PANEL_W,
      height: PANEL_H,
      xDomain: padDomain(...extent(arms.map((a) => a.ratio))),
      yDomain: padDomain(...extent(yValues)),
      title: geometry,
      xLabel: "delta_mu / sigma",
      yLabel: "steps to convergence",
    });

    const marks: string[] = [];
    for (const segment of segments(arms)) {
      const upper = segment.map((a): [number, number] => [
        panel.sx(a.ratio),
        panel.sy(a.mean! + band * (a.se ?? 0)),
      ]);
      const lower = segment
        .map((a): [number, number] => [
          panel.sx(a.ratio),
          panel.sy(a.mean! - band * (a.se ?? 0)),
        ])
        .reverse();
      marks.push(
        polygon([...upper, ...lower], `class="band" fill="#c7e9c0" fill-opacity="0.5" stroke="none"`),
      );
      marks.push(
        polyline(
          segment.map((a): [number, number] => [panel.sx(a.ratio), panel.sy(a.mean!)]),
          `class="mean" stroke="#2a6e35" stroke-width="1.5"`,
        ),
      );
    }
    for (const arm of present) {
      marks.push(
        circle(panel.sx(arm.ratio), panel.sy(arm.mean!), 3, `class="pt" fill="#2a6e35"`),
      );
    }
    return panel.wrap(marks.join("\n"));
  });

  return svgDocument(geometries.length * PANEL_W, PANEL_H, panels.join("\n"));
}
