/**
 * Canvas rendering for the console: grid with walls/stairs/goals, the
 * visibility bubble, the belief shading (straight from the server), the
 * walker and the blocker cursor, plus small phase portraits drawn from
 * trajectory chunks.
 */

import type { Cell } from "./protocol.js";
import type { SessionView } from "./view.js";
import { moveSelectable } from "./validate.js";

const COLORS = {
  floor: "#f2f2f0",
  hidden: "#d9d9d6",
  wall: "#3a3a3a",
  stairs: "#cfc4a8",
  goal: "#8fce8f",
  belief: "#9a9aa6",
  robot: "#2d6cdf",
  obstacle: "#e08a2d",
  legal: "#e0d12d",
};

export function renderGrid(
  ctx: CanvasRenderingContext2D,
  view: SessionView,
  px: number,
): void {
  const { cols, rows } = view.grid;
  ctx.clearRect(0, 0, cols * px, rows * px);
  const has = (cells: Cell[], c: number, r: number) =>
    cells.some((x) => x[0] === c && x[1] === r);
  for (let c = 0; c < cols; c++) {
    for (let r = 0; r < rows; r++) {
      let fill = has(view.visible, c, r) ? COLORS.floor : COLORS.hidden;
      if (has(view.stairs, c, r)) fill = COLORS.stairs;
      if (has(view.goals, c, r)) fill = COLORS.goal;
      if (has(view.walls, c, r)) fill = COLORS.wall;
      ctx.fillStyle = fill;
      ctx.fillRect(c * px, (rows - 1 - r) * px, px - 1, px - 1);
      if (has(view.beliefCells, c, r)) {
        ctx.fillStyle = COLORS.belief;
        ctx.globalAlpha = 0.55;
        ctx.fillRect(c * px, (rows - 1 - r) * px, px - 1, px - 1);
        ctx.globalAlpha = 1.0;
      }
      if (view.phase === "choosing" && moveSelectable(view, [c, r])) {
        ctx.strokeStyle = COLORS.legal;
        ctx.lineWidth = 3;
        ctx.strokeRect(c * px + 2, (rows - 1 - r) * px + 2, px - 5, px - 5);
      }
    }
  }
  drawDisc(ctx, view.robot.cell, rows, px, COLORS.robot);
  if (view.robot.standing) {
    drawBadge(ctx, view.robot.cell, rows, px, "■");
  }
  drawDisc(ctx, view.obstacle, rows, px, COLORS.obstacle);
}

function drawDisc(
  ctx: CanvasRenderingContext2D,
  cell: Cell,
  rows: number,
  px: number,
  color: string,
): void {
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(cell[0] * px + px / 2, (rows - 1 - cell[1]) * px + px / 2, px * 0.3, 0, 7);
  ctx.fill();
}

function drawBadge(
  ctx: CanvasRenderingContext2D,
  cell: Cell,
  rows: number,
  px: number,
  glyph: string,
): void {
  ctx.fillStyle = "#fff";
  ctx.font = `${Math.round(px * 0.3)}px sans-serif`;
  ctx.textAlign = "center";
  ctx.fillText(glyph, cell[0] * px + px / 2, (rows - 1 - cell[1]) * px + px * 0.62);
}

export function renderPortraits(
  ctx: CanvasRenderingContext2D,
  view: SessionView,
  w: number,
  h: number,
): void {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(0.5, 0.5, w - 1, h - 1);
  if (!view.portraits.length) return;
  const all = view.portraits.flat();
  const vmax = Math.max(0.2, ...all.map((s) => Math.abs(s.vx)));
  const xmax = Math.max(0.2, ...all.map((s) => Math.abs(s.x)));
  ctx.strokeStyle = COLORS.robot;
  ctx.lineWidth = 1;
  for (const kf of view.portraits) {
    ctx.beginPath();
    kf.forEach((s, i) => {
      const px = w / 2 + (s.x / xmax) * (w / 2 - 4);
      const py = h / 2 - (s.vx / vmax) * (h / 2 - 4);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
  }
}
