/**
 * Console-side session state machine.
 *
 * Display-and-forward only: every reward, observation, and termination
 * decision comes from the server; this class never computes gym logic.
 * The ground-truth panel is held apart from the transcript so the UI can
 * render it in the human-facing pane only, and reply building never reads
 * it, so it cannot leak into a reply except by a human typing it.
 */
import {
  HumanReply,
  ParsedFrame,
  ReplyRequest,
  ServerFrame,
  SessionMetrics,
  decodeFrame,
  parseServerFrame,
} from "./protocol.js";

export type TranscriptRow =
  | { kind: "observation"; text: string }
  | { kind: "agent"; turnIndex: number; verb: string; content: string }
  | {
      kind: "reward";
      turnIndex: number;
      value: number;
      observation: string;
      done: boolean;
    }
  | { kind: "error"; code: string; message: string }
  | { kind: "raw"; frame: unknown; issue: string };

export interface PendingTurn {
  request: ReplyRequest;
  /** true between a submitted reply and the server's verdict */
  locked: boolean;
  /** inline validation message when the server rejected the last reply */
  inlineError: string | null;
}

export type ReplyInput =
  | { enumChoice: string }
  | { text: string }
  | { scores: number[] }
  | { fields: Record<string, unknown> };

export class ConsoleSession {
  readonly sessionId: string;
  gym: string | null = null;
  groundTruth: Record<string, unknown> | null = null;
  maxTurns: number | null = null;
  transcript: TranscriptRow[] = [];
  pending: PendingTurn | null = null;
  metrics: SessionMetrics | null = null;
  ended = false;
  lastSeq = 0;

  constructor(sessionId: string) {
    this.sessionId = sessionId;
  }

  /**
   * Feed one inbound websocket frame (text or pre-parsed object).
   * Returns the recognized frame, or null for raw-inspection rows and
   * rejoin-replay duplicates.
   */
  ingest(data: unknown): ServerFrame | null {
    const parsed: ParsedFrame =
      typeof data === "string" ? decodeFrame(data) : parseServerFrame(data);
    if (!parsed.ok) {
      this.transcript.push({ kind: "raw", frame: parsed.raw, issue: parsed.issue });
      return null;
    }
    const frame = parsed.frame;
    if (frame.type !== "error") {
      if (frame.seq <= this.lastSeq) {
        return null; // rejoin replay, already rendered
      }
      this.lastSeq = frame.seq;
    }
    this.apply(frame);
    return frame;
  }

  private apply(frame: ServerFrame): void {
    switch (frame.type) {
      case "session_start":
        this.gym = frame.gym;
        this.groundTruth = frame.ground_truth;
        this.maxTurns = frame.max_turns;
        this.transcript.push({ kind: "observation", text: frame.initial_observation });
        break;
      case "agent_turn":
        this.transcript.push({
          kind: "agent",
          turnIndex: frame.turn_index,
          verb: frame.verb,
          content: frame.content,
        });
        break;
      case "reply_request":
        // the server keeps at most one request outstanding; a newer one
        // supersedes whatever the console still holds
        this.pending = { request: frame, locked: false, inlineError: null };
        break;
      case "turn_reward":
        this.transcript.push({
          kind: "reward",
          turnIndex: frame.turn_index,
          value: frame.value,
          observation: frame.observation,
          done: frame.done,
        });
        if (this.pending && this.pending.request.turn_index === frame.turn_index) {
          this.pending = null;
        }
        break;
      case "session_end":
        this.metrics = frame.metrics;
        this.ended = true;
        this.pending = null;
        break;
      case "error":
        if (frame.code === "ValidationError" && this.pending) {
          // the request stays pending server-side; unlock for another try
          this.pending.locked = false;
          this.pending.inlineError = frame.message;
        }
        this.transcript.push({
          kind: "error",
          code: frame.code,
          message: frame.message,
        });
        break;
    }
  }

  /**
   * Build the human_reply frame for the pending request and lock the
   * widget until the server answers. Throws on client-side misuse so the
   * UI can surface the message inline without a server round trip.
   */
  buildReply(input: ReplyInput): HumanReply {
    if (this.ended) {
      throw new Error("session has ended");
    }
    if (!this.pending) {
      throw new Error("no turn is awaiting a reply");
    }
    if (this.pending.locked) {
      throw new Error("reply already submitted; waiting for the server");
    }
    const spec = this.pending.request.reply_spec;
    const base = { type: "human_reply" as const, session_id: this.sessionId };
    let reply: HumanReply;
    if ("enumChoice" in input) {
      const field = spec.fields.find((f) => f.required && f.enum);
      if (!field) {
        throw new Error(`reply spec '${spec.kind}' takes no enum choice`);
      }
      if (!field.enum!.includes(input.enumChoice)) {
        throw new Error(
          `'${input.enumChoice}' is not one of ${field.enum!.join(", ")}`,
        );
      }
      reply = { ...base, enum_choice: input.enumChoice };
    } else if ("scores" in input) {
      if (spec.kind !== "criteria") {
        throw new Error(`reply spec '${spec.kind}' takes no criterion scores`);
      }
      reply = { ...base, fields: { scores: input.scores } };
    } else if ("fields" in input) {
      for (const field of spec.fields) {
        if (field.required && !(field.name in input.fields)) {
          throw new Error(`missing required field '${field.name}'`);
        }
      }
      reply = { ...base, fields: input.fields };
    } else {
      if (!input.text.trim()) {
        throw new Error("reply must not be empty");
      }
      reply = { ...base, content: input.text };
    }
    this.pending.locked = true;
    this.pending.inlineError = null;
    return reply;
  }

  /** Count of agent turns rendered so far. */
  agentTurnCount(): number {
    return this.transcript.filter((row) => row.kind === "agent").length;
  }
}
