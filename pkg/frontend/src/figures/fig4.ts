import { join } from "node:path";
import { num, readCsv } from "../csv.js";
import { extent, padDomain } from "../scale.js";
import { circle, polygon, polyline, svgDocument } from "../svg.js";
import { makePanel } from "../panel.js";

// Mean final silo count against k with a +/- band * se envelope. Means and
// standard errors come straight from the summary file.
export function fig4(dir: string, band: number): string {
  const path = join(dir, "silos_vs_k.csv");
  const rows = readCsv(path, ["k", "mean_final_silos", "se", "replicates"]);
  const data = rows
    .map((r) => ({
      k: num(r, "k", path),
      mean: num(r, "mean_final_silos", path),
      se: num(r, "se", path),
    }))
    .sort((a, b) => a.k - b.k);

  const los = data.map((d) => d.mean - band * d.se);
  const his = data.map((d) => d.mean + band * d.se);
  const panel = makePanel({
    x: 0,
    y: 0,
    width: 560,
    height: 400,
    xDomain: padDomain(...extent(data.map((d) => d.k))),
    yDomain: padDomain(...extent([...los, ...his])),
    xLabel: "k",
    yLabel: "final silos",
  });

  const upper = data.map((d, i): [number, number] => [panel.sx(d.k), panel.sy(his[i])]);
  const lower = data
    .map((d, i): [number, number] => [panel.sx(d.k), panel.sy(los[i])])
    .reverse();
  const marks = [
    polygon([...upper, ...lower], `class="band" fill="#9ecae1" fill-opacity="0.45" stroke="none"`),
    polyline(
      data.map((d): [number, number] => [panel.sx(d.k), panel.sy(d.mean)]),
      `class="mean" stroke="#1f4e79" stroke-width="1.5"`,
    ),
    ...data.map((d) =>
      circle(panel.sx(d.k), panel.sy(d.mean), 3, `class="pt" fill="#1f4e79"`),
    ),
  ];
  return svgDocument(560, 400, panel.wrap(marks.join("\n")));
}
