/**
 * Live end-to-end check: a scripted agent plays a full telepathy session
 * through `userl human-serve` while this console joins over the real
 * websocket, answers every responder question and the final judgment, and
 * receives the metrics card. Every inbound frame must satisfy the wire
 * schema.
 */
import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { WebSocket } from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { decodeFrame } from "../src/protocol.js";
import { ConsoleSession } from "../src/session.js";
import { BridgeClient, WebSocketLike } from "../src/transport.js";

const TASK_ID = "telepathy-live-001";

const TASK = {
  task_id: TASK_ID,
  gym: "telepathy",
  payload: {
    target_entity: "a compass",
    entity_description:
      "A handheld navigation instrument whose magnetized needle points north.",
    category: "an object",
  },
};

const AGENT_SCRIPT = [
  { verb: "action", content: "Is it man-made?" },
  { verb: "action", content: "Can it fit in one hand?" },
  { verb: "action", content: "Does it help with navigation?" },
  { verb: "answer", content: "a compass" },
];

let workdir: string;
let server: ChildProcess;
let serverExit: Promise<number | null>;
let port: number;

function waitFor(check: () => boolean, ms = 30_000): Promise<void> {
  return new Promise((resolve, reject) => {
    const started = Date.now();
    const timer = setInterval(() => {
      if (check()) {
        clearInterval(timer);
        resolve();
      } else if (Date.now() - started > ms) {
        clearInterval(timer);
        reject(new Error("condition not reached in time"));
      }
    }, 20);
  });
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "console-e2e-"));
  const tasksPath = join(workdir, "tasks.jsonl");
  const scriptPath = join(workdir, "agent-script.json");
  writeFileSync(tasksPath, JSON.stringify(TASK) + "\n");
  writeFileSync(scriptPath, JSON.stringify(AGENT_SCRIPT));

  server = spawn(
    "python3",
    [
      "-m", "userl.cli", "human-serve",
      "--tasks", tasksPath,
      "--agent-script", scriptPath,
      "--host", "127.0.0.1",
      "--port", "0",
      "--reply-deadline", "60",
      "--once",
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  serverExit = new Promise((resolve) => server.on("exit", resolve));

  let stdout = "";
  server.stdout!.on("data", (chunk) => {
    stdout += String(chunk);
  });
  let stderr = "";
  server.stderr!.on("data", (chunk) => {
    stderr += String(chunk);
  });
  await waitFor(() => /listening on ws:\/\/127\.0\.0\.1:(\d+)/.test(stdout)).catch(
    () => {
      throw new Error(`server never came up\nstdout: ${stdout}\nstderr: ${stderr}`);
    },
  );
  port = Number(stdout.match(/listening on ws:\/\/127\.0\.0\.1:(\d+)/)![1]);
});

afterAll(async () => {
  if (server && server.exitCode === null) {
    server.kill();
    await serverExit;
  }
  rmSync(workdir, { recursive: true, force: true });
});

describe("full telepathy session through the console", () => {
  it("joins, answers every request, and receives a goal metrics card", async () => {
    const session = new ConsoleSession(TASK_ID);
    const schemaFailures: string[] = [];
    const repliesSent: Record<string, unknown>[] = [];

    const client = new BridgeClient({
      url: `ws://127.0.0.1:${port}`,
      sessionId: TASK_ID,
      makeSocket: (url) => new WebSocket(url) as unknown as WebSocketLike,
      onFrame: (data) => {
        const parsed = decodeFrame(data);
        if (!parsed.ok) {
          schemaFailures.push(`${parsed.issue}: ${data}`);
        }
        session.ingest(data);
        if (session.pending && !session.pending.locked) {
          // responder questions and the final judgment are both
          // single-enum turns; an honest human answers Yes to all four
          const reply = session.buildReply({ enumChoice: "Yes" });
          repliesSent.push(reply);
          client.send(reply);
        }
      },
    });
    client.connect();

    await waitFor(() => session.ended);
    client.stop();

    expect(schemaFailures).toEqual([]);
    expect(session.gym).toBe("telepathy");
    expect(session.groundTruth).toMatchObject({ target_entity: "a compass" });
    expect(session.agentTurnCount()).toBe(4);
    expect(repliesSent.length).toBeGreaterThanOrEqual(4);
    for (const reply of repliesSent) {
      expect(reply).toMatchObject({ type: "human_reply", enum_choice: "Yes" });
      expect(JSON.stringify(reply)).not.toContain("compass");
    }

    const metrics = session.metrics!;
    expect(metrics.status).toBe("goal");
    expect(metrics.reward_sum).toBeCloseTo(1.0, 12);
    expect(metrics.effective_turns).toBe(4);
    expect(metrics.turns).toBe(4);

    const rewards = session.transcript.filter((row) => row.kind === "reward");
    expect(rewards).toHaveLength(4);
    expect(rewards.at(-1)).toMatchObject({ value: 1.0, done: true });

    // once-mode: the server shuts down cleanly after the session ends
    expect(await serverExit).toBe(0);
  });
});
