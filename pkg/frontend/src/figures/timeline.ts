import { Row, num, uniqueInOrder } from "../csv.js";
import { labelColor } from "../color.js";
import { makePanel } from "../panel.js";
import { polyline } from "../svg.js";

export interface Box {
  x: number;
  y: number;
  width: number;
  height: number;
}

// Per-agent silo trajectories for one replicate. Agents sharing a silo would
// overdraw to a single line, so each agent gets a small fixed pixel offset.
export function timelinePanel(
  rows: Row[],
  path: string,
  box: Box,
  opts: { title?: string; xLabel?: string; yLabel?: string; mini?: boolean },
): string {
  const agents = uniqueInOrder(rows.map((r) => r.agent)).sort(
    (a, b) => Number(a) - Number(b),
  );
  let tMax = 1;
  let siloMax = 1;
  for (const row of rows) {
    tMax = Math.max(tMax, num(row, "t", path));
    siloMax = Math.max(siloMax, num(row, "silo", path));
  }

  const panel = makePanel({
    ...box,
    xDomain: [0, tMax],
    yDomain: [0, siloMax],
    title: opts.title,
    xLabel: opts.xLabel,
    yLabel: opts.yLabel,
    mini: opts.mini,
  });

  const marks: string[] = [];
  agents.forEach((agent, index) => {
    const offset = ((index + 0.5) / agents.length - 0.5) * 6;
    const pts = rows
      .filter((r) => r.agent === agent)
      .sort((a, b) => num(a, "t", path) - num(b, "t", path))
      .map((r): [number, number] => [
        panel.sx(num(r, "t", path)),
        panel.sy(num(r, "silo", path)) + offset,
      ]);
    marks.push(
      polyline(
        pts,
        `class="agent" stroke="${labelColor("agent-" + agent)}" stroke-width="${opts.mini ? 1 : 1.5}"`,
      ),
    );
  });

  return panel.wrap(marks.join("\n"));
}
