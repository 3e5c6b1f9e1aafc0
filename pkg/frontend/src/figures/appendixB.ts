import { join } from "node:path";
import { num, readCsv, uniqueInOrder } from "../csv.js";
import { labelColor } from "../color.js";
import { extent, padDomain } from "../scale.js";
import { makePanel } from "../panel.js";
import { polyline, svgDocument } from "../svg.js";

// Largest per-component standard deviation over time under adaptive
// covariances, one curve per replicate.
export function appendixB(dir: string, _band: number): string {
  const path = join(dir, "maxstd.csv");
  const rows = readCsv(path, ["replicate", "t", "max_std"]);

  const tMax = Math.max(1, ...rows.map((r) => num(r, "t", path)));
  const values = rows.map((r) => num(r, "max_std", path));
  const panel = makePanel({
    x: 0,
    y: 0,
    width: 560,
    height: 400,
    xDomain: [0, tMax],
    yDomain: padDomain(...extent([0, ...values])),
    xLabel: "t",
    yLabel: "max std",
  });

  const replicates = uniqueInOrder(rows.map((r) => r.replicate));
  const marks = replicates.map((rep) => {
    const pts = rows
      .filter((r) => r.replicate === rep)
      .sort((a, b) => num(a, "t", path) - num(b, "t", path))
      .map((r): [number, number] => [
        panel.sx(num(r, "t", path)),
        panel.sy(num(r, "max_std", path)),
      ]);
    return polyline(
      pts,
      `class="replicate" stroke="${labelColor("rep-" + rep)}" stroke-width="1.5"`,
    );
  });

  return svgDocument(560, 400, panel.wrap(marks.join("\n")));
}
