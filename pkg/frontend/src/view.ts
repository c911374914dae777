/**
 * Session view state: a pure reduction of the server's messages.
 *
 * The console never infers game state on its own; the belief shading, the
 * visible set and the legal move list are exactly the last values the
 * server sent. That keeps the display authoritative and makes mirroring
 * testable against recorded message logs.
 */

import type {
  Cell,
  EpisodeEndMsg,
  HelloMsg,
  LegalMovesMsg,
  RejectMsg,
  ServerMsg,
  StateUpdateMsg,
  TrajectoryChunkMsg,
} from "./protocol.js";

export type Phase = "connecting" | "watching" | "choosing" | "ended" | "error";

export interface PortraitSample {
  x: number;
  y: number;
  vx: number;
  vy: number;
}

export interface SessionView {
  phase: Phase;
  tick: number;
  grid: { cols: number; rows: number; cellSize: number };
  walls: Cell[];
  stairs: Cell[];
  goals: Cell[];
  visibilityRadius: number;
  robot: { cell: Cell; heading: string; standing: boolean; vApex: number };
  obstacle: Cell;
  beliefKind: "e" | "r" | null;
  beliefCells: Cell[];
  visible: Cell[];
  legalMoves: Cell[];
  goalsVisited: [number, number];
  rejects: string[];
  portraits: PortraitSample[][]; // per keyframe
  outcome: string | null;
  lastError: string | null;
}

export function initialView(): SessionView {
  return {
    phase: "connecting",
    tick: 0,
    grid: { cols: 0, rows: 0, cellSize: 1 },
    walls: [],
    stairs: [],
    goals: [],
    visibilityRadius: 0,
    robot: { cell: [0, 0], heading: "E", standing: true, vApex: 0 },
    obstacle: [0, 0],
    beliefKind: null,
    beliefCells: [],
    visible: [],
    legalMoves: [],
    goalsVisited: [0, 0],
    rejects: [],
    portraits: [],
    outcome: null,
    lastError: null,
  };
}

export function reduce(view: SessionView, msg: ServerMsg): SessionView {
  switch (msg.type) {
    case "hello":
      return reduceHello(view, msg);
    case "state_update":
      return reduceState(view, msg);
    case "legal_moves":
      return reduceLegalMoves(view, msg);
    case "reject":
      return reduceReject(view, msg);
    case "trajectory_chunk":
      return reduceChunk(view, msg);
    case "episode_end":
      return reduceEnd(view, msg);
  }
}

/** A malformed line pauses the session visibly rather than guessing. */
export function reduceError(view: SessionView, message: string): SessionView {
  return { ...view, phase: "error", lastError: message };
}

function reduceHello(view: SessionView, msg: HelloMsg): SessionView {
  return {
    ...view,
    phase: "watching",
    grid: {
      cols: msg.grid.dims[0],
      rows: msg.grid.dims[1],
      cellSize: msg.grid.cell_size,
    },
    walls: msg.static_obstacles,
    stairs: msg.stairs,
    goals: msg.goals,
    visibilityRadius: msg.visibility_radius,
    robot: { cell: msg.robot, heading: "E", standing: true, vApex: 0 },
    obstacle: msg.obstacle,
  };
}

function reduceState(view: SessionView, msg: StateUpdateMsg): SessionView {
  return {
    ...view,
    phase: "watching",
    tick: msg.tick,
    robot: {
      cell: msg.robot.cell,
      heading: msg.robot.heading,
      standing: msg.robot.standing,
      vApex: msg.robot.v_apex,
    },
    obstacle: msg.obstacle,
    beliefKind: msg.belief.kind,
    beliefCells: msg.belief.cells,
    visible: msg.visible,
    goalsVisited: msg.goals_visited,
    portraits: [],
  };
}

function reduceLegalMoves(view: SessionView, msg: LegalMovesMsg): SessionView {
  return { ...view, phase: "choosing", tick: msg.tick, legalMoves: msg.moves };
}

function reduceReject(view: SessionView, msg: RejectMsg): SessionView {
  return { ...view, rejects: [...view.rejects, msg.reason] };
}

function reduceChunk(view: SessionView, msg: TrajectoryChunkMsg): SessionView {
  const samples = msg.samples.map((s) => ({
    x: s[1],
    y: s[2],
    vx: s[4],
    vy: s[5],
  }));
  return { ...view, portraits: [...view.portraits, samples] };
}

function reduceEnd(view: SessionView, msg: EpisodeEndMsg): SessionView {
  return {
    ...view,
    phase: "ended",
    tick: msg.tick,
    outcome: msg.outcome,
    goalsVisited: msg.goals_visited,
    legalMoves: [],
  };
}
