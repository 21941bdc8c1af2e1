import { describe, expect, it } from "vitest";

import { ConsoleSession } from "../src/session.js";

function frame(obj: Record<string, unknown>): string {
  return JSON.stringify(obj);
}

const START = frame({
  type: "session_start",
  seq: 1,
  session_id: "t-1",
  gym: "telepathy",
  task_id: "t-1",
  ground_truth: { target: "Eiffel Tower" },
  initial_observation: "Let's play twenty questions.",
  max_turns: 16,
});

const TURN = frame({
  type: "agent_turn",
  seq: 2,
  session_id: "t-1",
  turn_index: 1,
  verb: "action",
  content: "Is it man-made?",
});

const ENUM_REQUEST = frame({
  type: "reply_request",
  seq: 3,
  session_id: "t-1",
  turn_index: 1,
  gym: "telepathy",
  role: "responder",
  prompt: "Is it man-made?",
  system: "Answer about the target.",
  reply_spec: {
    kind: "enum",
    fields: [{ name: "response", required: true, enum: ["Yes", "No", "Maybe"] }],
  },
});

const REWARD = frame({
  type: "turn_reward",
  seq: 4,
  session_id: "t-1",
  turn_index: 1,
  value: 0.0,
  observation: "Yes",
  done: false,
});

const END = frame({
  type: "session_end",
  seq: 5,
  session_id: "t-1",
  metrics: {
    reward_sum: 1.0,
    effective_turns: 4,
    time_weighted_performance: 0.25,
    turns: 4,
    status: "goal",
  },
});

function primed(): ConsoleSession {
  const session = new ConsoleSession("t-1");
  session.ingest(START);
  session.ingest(TURN);
  session.ingest(ENUM_REQUEST);
  return session;
}

describe("frame ingestion", () => {
  it("replays a full session into transcript, pending, and metrics", () => {
    const session = primed();
    expect(session.gym).toBe("telepathy");
    expect(session.maxTurns).toBe(16);
    expect(session.transcript.map((row) => row.kind)).toEqual([
      "observation",
      "agent",
    ]);
    expect(session.pending?.request.role).toBe("responder");
    session.ingest(REWARD);
    expect(session.pending).toBeNull();
    session.ingest(END);
    expect(session.ended).toBe(true);
    expect(session.metrics?.status).toBe("goal");
    expect(session.agentTurnCount()).toBe(1);
  });

  it("drops rejoin-replay duplicates by seq", () => {
    const session = primed();
    const before = session.transcript.length;
    expect(session.ingest(START)).toBeNull();
    expect(session.ingest(TURN)).toBeNull();
    expect(session.transcript.length).toBe(before);
    expect(session.pending).not.toBeNull();
  });

  it("renders unknown frame types as raw rows instead of dropping them", () => {
    const session = new ConsoleSession("t-1");
    expect(session.ingest(frame({ type: "heartbeat", at: 12 }))).toBeNull();
    expect(session.ingest("not json at all")).toBeNull();
    expect(session.transcript.map((row) => row.kind)).toEqual(["raw", "raw"]);
  });

  it("keeps ground truth apart from the transcript", () => {
    const session = primed();
    expect(session.groundTruth).toEqual({ target: "Eiffel Tower" });
    const rendered = JSON.stringify(session.transcript);
    expect(rendered).not.toContain("Eiffel Tower");
  });
});

describe("reply building", () => {
  it("turns an enum choice into enum_choice and locks the widget", () => {
    const session = primed();
    const reply = session.buildReply({ enumChoice: "Yes" });
    expect(reply).toEqual({
      type: "human_reply",
      session_id: "t-1",
      enum_choice: "Yes",
    });
    expect(session.pending?.locked).toBe(true);
    expect(() => session.buildReply({ enumChoice: "No" })).toThrow(/submitted/);
  });

  it("rejects choices outside the enum", () => {
    const session = primed();
    expect(() => session.buildReply({ enumChoice: "Perhaps" })).toThrow(/not one of/);
    expect(session.pending?.locked).toBe(false);
  });

  it("unlocks and shows the message when the server rejects a reply", () => {
    const session = primed();
    session.buildReply({ enumChoice: "Yes" });
    session.ingest(
      frame({ type: "error", code: "ValidationError", message: "pick Yes or No" }),
    );
    expect(session.pending?.locked).toBe(false);
    expect(session.pending?.inlineError).toBe("pick Yes or No");
    expect(session.transcript.at(-1)?.kind).toBe("error");
    const retry = session.buildReply({ enumChoice: "No" });
    expect(retry).toMatchObject({ enum_choice: "No" });
    expect(session.pending?.inlineError).toBeNull();
  });

  it("keeps exactly one pending turn and clears it on the matching reward", () => {
    const session = primed();
    session.buildReply({ enumChoice: "Yes" });
    session.ingest(REWARD);
    expect(session.pending).toBeNull();
    expect(() => session.buildReply({ enumChoice: "Yes" })).toThrow(/no turn/);
  });

  it("packs criterion scores as fields.scores", () => {
    const session = new ConsoleSession("turtle-1");
    session.ingest(
      frame({
        type: "reply_request",
        seq: 1,
        session_id: "turtle-1",
        turn_index: 2,
        gym: "turtle",
        role: "judge",
        prompt: "Score:\n1. head drawn\n2. shell drawn\n3. legs drawn",
        system: "Grade the drawing.",
        reply_spec: { kind: "criteria", fields: [{ name: "scores", required: true }] },
      }),
    );
    const reply = session.buildReply({ scores: [1.0, 0.5, 0.0] });
    expect(reply).toMatchObject({ fields: { scores: [1.0, 0.5, 0.0] } });
  });

  it("rejects criterion scores against a non-criteria spec", () => {
    const session = primed();
    expect(() => session.buildReply({ scores: [1.0] })).toThrow(/criterion/);
  });

  it("rejects empty free text and missing required form fields", () => {
    const session = new ConsoleSession("p-1");
    session.ingest(
      frame({
        type: "reply_request",
        seq: 1,
        session_id: "p-1",
        turn_index: 1,
        gym: "persuade",
        role: "persuadee",
        prompt: "React to the pitch.",
        system: "Stay in character.",
        reply_spec: {
          kind: "form",
          fields: [
            { name: "stance", required: true },
            { name: "aside", required: false },
          ],
        },
      }),
    );
    expect(() => session.buildReply({ fields: { aside: "hm" } })).toThrow(/stance/);
    const reply = session.buildReply({ fields: { stance: "warming up" } });
    expect(reply).toMatchObject({ fields: { stance: "warming up" } });
  });

  it("rejects empty text replies", () => {
    const session = new ConsoleSession("f-1");
    session.ingest(
      frame({
        type: "reply_request",
        seq: 1,
        session_id: "f-1",
        turn_index: 1,
        gym: "function",
        role: "user",
        prompt: "Anything to add?",
        system: "Speak freely.",
        reply_spec: { kind: "text", fields: [{ name: "content", required: true }] },
      }),
    );
    expect(() => session.buildReply({ text: "   " })).toThrow(/empty/);
    expect(session.buildReply({ text: "carry on" })).toMatchObject({
      content: "carry on",
    });
  });

  it("never copies ground truth into a reply", () => {
    const session = primed();
    const reply = session.buildReply({ enumChoice: "Yes" });
    expect(JSON.stringify(reply)).not.toContain("Eiffel Tower");
  });

  it("blocks replies after the session ends", () => {
    const session = primed();
    session.ingest(REWARD);
    session.ingest(END);
    expect(() => session.buildReply({ text: "late" })).toThrow(/ended/);
  });
});
