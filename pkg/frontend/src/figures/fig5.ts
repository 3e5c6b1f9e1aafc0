import { readFileSync } from "node:fs";
import { join } from "node:path";
import { readCsv } from "../csv.js";
import { svgDocument } from "../svg.js";
import { timelinePanel } from "./timeline.js";

const CELL_W = 230;
const CELL_H = 180;

// One mini silo timeline per (p, k) cell of a phase-grid run. Cell directories
// come from the manifest file list; their names carry the exact float
// formatting of the arm settings, so they are never re-derived from numbers.
export function fig5(dir: string, _band: number): string {
  const manifestPath = join(dir, "manifest.json");
  const manifest = JSON.parse(readFileSync(manifestPath, "utf8")) as {
    p_list?: unknown[];
    k_list?: unknown[];
    files?: string[];
  };
  if (!Array.isArray(manifest.p_list) || !Array.isArray(manifest.k_list)) {
    throw new Error(`${manifestPath}: missing "p_list" or "k_list"`);
  }
  const cellDirs = (manifest.files ?? [])
    .filter((f) => f.endsWith("/silos.csv"))
    .map((f) => f.slice(0, -"/silos.csv".length));
  const rows = manifest.p_list.length;
  const cols = manifest.k_list.length;
  if (cellDirs.length !== rows * cols) {
    throw new Error(
      `${manifestPath}: expected ${rows * cols} grid cells, found ${cellDirs.length}`,
    );
  }

  const panels: string[] = [];
  cellDirs.forEach((cell, index) => {
    const path = join(dir, cell, "silos.csv");
    const cellRows = readCsv(path, ["replicate", "t", "agent", "silo"]);
    const first = cellRows.length > 0 ? cellRows[0].replicate : "0";
    const trace = cellRows.filter((r) => r.replicate === first);
    const row = Math.floor(index / cols);
    const col = index % cols;
    panels.push(
      timelinePanel(
        trace,
        path,
        { x: col * CELL_W, y: row * CELL_H, width: CELL_W, height: CELL_H },
        { title: cell.replace("_", ", "), mini: true },
      ),
    );
  });

  return svgDocument(cols * CELL_W, rows * CELL_H, panels.join("\n"));
}
