/**
 * Node-side session client over raw TCP (the canonical transport).
 * Used by the test harness and the browser bridge.
 */

import * as net from "node:net";
import { LineBuffer, parseLine, encodeMove, type Cell, type ServerMsg } from "./protocol.js";

export class SessionClient {
  private socket: net.Socket;
  private lines = new LineBuffer();
  private queue: ServerMsg[] = [];
  private waiters: Array<(msg: ServerMsg) => void> = [];
  private closed = false;

  constructor(host: string, port: number) {
    this.socket = net.createConnection({ host, port });
    this.socket.setNoDelay(true);
    this.socket.on("data", (chunk) => {
      for (const line of this.lines.push(chunk.toString("utf8"))) {
        const msg = parseLine(line);
        const waiter = this.waiters.shift();
        if (waiter) waiter(msg);
        else this.queue.push(msg);
      }
    });
    this.socket.on("close", () => {
      this.closed = true;
      for (const w of this.waiters.splice(0)) {
        w({ type: "episode_end", tick: -1, outcome: "disconnected", goals_visited: [0, 0] });
      }
    });
  }

  ready(): Promise<void> {
    return new Promise((resolve, reject) => {
      this.socket.once("connect", resolve);
      this.socket.once("error", reject);
    });
  }

  next(timeoutMs = 15000): Promise<ServerMsg> {
    const queued = this.queue.shift();
    if (queued) return Promise.resolve(queued);
    if (this.closed) return Promise.reject(new Error("connection closed"));
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => reject(new Error("message timeout")), timeoutMs);
      this.waiters.push((msg) => {
        clearTimeout(timer);
        resolve(msg);
      });
    });
  }

  sendMove(tick: number, cell: Cell): void {
    this.socket.write(encodeMove(tick, cell));
  }

  close(): void {
    this.socket.destroy();
  }
}
