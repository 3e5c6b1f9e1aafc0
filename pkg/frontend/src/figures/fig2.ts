import { join } from "node:path";
import { readCsv } from "../csv.js";
import { svgDocument } from "../svg.js";
import { timelinePanel } from "./timeline.js";

// Silo membership of every agent over time, first replicate in the file.
export function fig2(dir: string, _band: number): string {
  const path = join(dir, "silos.csv");
  const rows = readCsv(path, ["replicate", "t", "agent", "silo"]);
  const first = rows.length > 0 ? rows[0].replicate : "0";
  const trace = rows.filter((r) => r.replicate === first);
  const body = timelinePanel(trace, path, { x: 0, y: 0, width: 640, height: 420 }, {
    title: `silo membership, replicate ${first}`,
    xLabel: "t",
    yLabel: "silo",
  });
  return svgDocument(640, 420, body);
}
