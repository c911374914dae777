/**
 * Browser bridge: serves the static console and relays the TCP session as
 * Server-Sent Events downstream plus a POST endpoint for moves. Browsers
 * cannot open raw TCP sockets; the planner side stays single-transport.
 *
 *   GET  /session        -> SSE stream of server messages (one per event)
 *   POST /session/move   -> {tick, cell}; forwarded as a move message
 */

import express from "express";
import * as path from "node:path";
import { fileURLToPath } from "node:url";
import { SessionClient } from "./client.js";

const TCP_HOST = process.env.BIPEDNAV_HOST ?? "127.0.0.1";
const TCP_PORT = Number(process.env.BIPEDNAV_PORT ?? 7345);
const HTTP_PORT = Number(process.env.BRIDGE_PORT ?? 8080);

const here = path.dirname(fileURLToPath(import.meta.url));
const app = express();
app.use(express.json());
app.use(express.static(path.join(here, "..", "public")));

let client: SessionClient | null = null;

app.get("/session", async (req, res) => {
  res.setHeader("Content-Type", "text/event-stream");
  res.setHeader("Cache-Control", "no-cache");
  res.flushHeaders();
  client?.close();
  client = new SessionClient(TCP_HOST, TCP_PORT);
  try {
    await client.ready();
    for (;;) {
      const msg = await client.next(600000);
      res.write(`data: ${JSON.stringify(msg)}\n\n`);
      if (msg.type === "episode_end") break;
    }
  } catch (e) {
    res.write(`data: ${JSON.stringify({ type: "episode_end", tick: -1, outcome: `bridge error: ${String(e)}`, goals_visited: [0, 0] })}\n\n`);
  }
  res.end();
});

app.post("/session/move", (req, res) => {
  const { tick, cell } = req.body ?? {};
  if (!client || !Array.isArray(cell) || cell.length !== 2) {
    res.status(400).json({ ok: false });
    return;
  }
  client.sendMove(Number(tick), [Number(cell[0]), Number(cell[1])]);
  res.json({ ok: true });
});

app.listen(HTTP_PORT, () => {
  console.log(`console on http://localhost:${HTTP_PORT} (session at ${TCP_HOST}:${TCP_PORT})`);
});
