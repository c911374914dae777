/**
 * Session protocol messages (version 1), mirroring docs/protocol.md.
 *
 * The wire is newline-delimited JSON over a byte stream; parseLine turns one
 * line into a typed message or throws. The client performs no inference of
 * its own: every field rendered by the console comes straight from these
 * messages.
 */

export type Cell = [number, number];

export interface HelloMsg {
  type: "hello";
  version: number;
  grid: { dims: [number, number]; cell_size: number };
  static_obstacles: Cell[];
  stairs: Cell[];
  goals: [Cell, Cell];
  partitions: Cell[][];
  visibility_radius: number;
  obstacle: Cell;
  robot: Cell;
}

export interface StateUpdateMsg {
  type: "state_update";
  tick: number;
  robot: { cell: Cell; heading: string; standing: boolean; v_apex: number };
  belief: { kind: "e" | "r"; value: unknown; cells: Cell[] };
  visible: Cell[];
  goals_visited: [number, number];
  obstacle: Cell;
}

export interface LegalMovesMsg {
  type: "legal_moves";
  tick: number;
  moves: Cell[];
}

export interface RejectMsg {
  type: "reject";
  tick: number;
  reason: string;
}

export interface TrajectoryChunkMsg {
  type: "trajectory_chunk";
  tick: number;
  keyframe: number;
  samples: number[][]; // [t, x, y, z, vx, vy]
}

export interface EpisodeEndMsg {
  type: "episode_end";
  tick: number;
  outcome: string;
  goals_visited: [number, number];
}

export interface MoveMsg {
  type: "move";
  tick: number;
  cell: Cell;
}

export type ServerMsg =
  | HelloMsg
  | StateUpdateMsg
  | LegalMovesMsg
  | RejectMsg
  | TrajectoryChunkMsg
  | EpisodeEndMsg;

const SERVER_TYPES = new Set([
  "hello",
  "state_update",
  "legal_moves",
  "reject",
  "trajectory_chunk",
  "episode_end",
]);

export class ProtocolError extends Error {}

export function parseLine(line: string): ServerMsg {
  let msg: unknown;
  try {
    msg = JSON.parse(line);
  } catch (e) {
    throw new ProtocolError(`unparseable message: ${String(e)}`);
  }
  if (
    typeof msg !== "object" ||
    msg === null ||
    !SERVER_TYPES.has((msg as { type?: string }).type ?? "")
  ) {
    throw new ProtocolError(`malformed message: ${line.slice(0, 80)}`);
  }
  return msg as ServerMsg;
}

export function encodeMove(tick: number, cell: Cell): string {
  const msg: MoveMsg = { type: "move", tick, cell };
  return JSON.stringify(msg) + "\n";
}

/** Incremental line splitter for a byte stream. */
export class LineBuffer {
  private buf = "";

  push(chunk: string): string[] {
    this.buf += chunk;
    const lines = this.buf.split("\n");
    this.buf = lines.pop() ?? "";
    return lines.filter((l) => l.trim().length > 0);
  }
}
