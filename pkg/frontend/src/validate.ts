/**
 * Client-side move pre-validation, mirroring the server's rules so the UI
 * can grey out cells before anything hits the wire. The server remains
 * authoritative; these checks only gate what the user can click.
 */

import type { Cell } from "./protocol.js";
import type { SessionView } from "./view.js";

function sameCell(a: Cell, b: Cell): boolean {
  return a[0] === b[0] && a[1] === b[1];
}

export function moveSelectable(view: SessionView, target: Cell): boolean {
  if (view.phase !== "choosing") return false;
  // must be offered by the server
  if (!view.legalMoves.some((m) => sameCell(m, target))) return false;
  // one cell per tick: stay or a 4-neighbor
  const dc = Math.abs(target[0] - view.obstacle[0]);
  const dr = Math.abs(target[1] - view.obstacle[1]);
  if (dc + dr > 1) return false;
  // never onto a standing walker
  if (view.robot.standing && sameCell(target, view.robot.cell)) return false;
  return true;
}

export function selectableMoves(view: SessionView): Cell[] {
  return view.legalMoves.filter((m) => moveSelectable(view, m));
}
