import { join } from "node:path";
import { num, readCsv, uniqueInOrder } from "../csv.js";
import { labelColor } from "../color.js";
import { makePanel } from "../panel.js";
import { polyline, svgDocument } from "../svg.js";

// Number of distinct silos over time, one curve per replicate. The count is a
// per-frame tally of the membership file, not a statistic over replicates.
export function fig6(dir: string, _band: number): string {
  const path = join(dir, "silos.csv");
  const rows = readCsv(path, ["replicate", "t", "agent", "silo"]);

  const counts = new Map<string, Map<number, Set<string>>>();
  for (const row of rows) {
    const t = num(row, "t", path);
    let byT = counts.get(row.replicate);
    if (!byT) {
      byT = new Map();
      counts.set(row.replicate, byT);
    }
    let silos = byT.get(t);
    if (!silos) {
      silos = new Set();
      byT.set(t, silos);
    }
    silos.add(row.silo);
  }

  let tMax = 1;
  let countMax = 1;
  for (const byT of counts.values()) {
    for (const [t, silos] of byT) {
      tMax = Math.max(tMax, t);
      countMax = Math.max(countMax, silos.size);
    }
  }

  const panel = makePanel({
    x: 0,
    y: 0,
    width: 560,
    height: 400,
    xDomain: [0, tMax],
    yDomain: [0, countMax],
    xLabel: "t",
    yLabel: "distinct silos",
  });

  const replicates = uniqueInOrder(rows.map((r) => r.replicate));
  const marks = replicates.map((rep) => {
    const byT = counts.get(rep)!;
    const pts = [...byT.entries()]
      .sort((a, b) => a[0] - b[0])
      .map(([t, silos]): [number, number] => [panel.sx(t), panel.sy(silos.size)]);
    return polyline(
      pts,
      `class="replicate" stroke="${labelColor("rep-" + rep)}" stroke-width="1.5"`,
    );
  });

  return svgDocument(560, 400, panel.wrap(marks.join("\n")));
}
