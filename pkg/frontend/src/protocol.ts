/**
 * Wire schemas for the human-bridge websocket protocol.
 *
 * Mirrors docs/bridge-protocol.md byte for byte: every frame is one JSON
 * object per websocket message. The console validates every inbound frame
 * against these schemas; frames that do not match any known type are kept
 * for raw inspection instead of being dropped.
 */
import { z } from "zod";

export const REPLY_KINDS = ["enum", "criteria", "form", "text"] as const;

export const ReplyFieldSchema = z.object({
  name: z.string(),
  required: z.boolean(),
  enum: z.array(z.string()).optional(),
});

export const ReplySpecSchema = z.object({
  kind: z.enum(REPLY_KINDS),
  fields: z.array(ReplyFieldSchema),
});

const sequenced = {
  seq: z.number().int().positive(),
  session_id: z.string(),
};

export const SessionStartSchema = z.object({
  type: z.literal("session_start"),
  ...sequenced,
  gym: z.string(),
  task_id: z.string(),
  ground_truth: z.record(z.unknown()),
  initial_observation: z.string(),
  max_turns: z.number().int().positive(),
});

export const AgentTurnSchema = z.object({
  type: z.literal("agent_turn"),
  ...sequenced,
  turn_index: z.number().int().positive(),
  verb: z.enum(["action", "answer", "search"]),
  content: z.string(),
});

export const ReplyRequestSchema = z.object({
  type: z.literal("reply_request"),
  ...sequenced,
  turn_index: z.number().int().positive(),
  gym: z.string(),
  role: z.string(),
  prompt: z.string(),
  system: z.string(),
  reply_spec: ReplySpecSchema,
});

export const TurnRewardSchema = z.object({
  type: z.literal("turn_reward"),
  ...sequenced,
  turn_index: z.number().int().positive(),
  value: z.number(),
  observation: z.string(),
  done: z.boolean(),
});

export const SessionMetricsSchema = z.object({
  reward_sum: z.number(),
  effective_turns: z.number().int().nonnegative(),
  time_weighted_performance: z.number(),
  turns: z.number().int().nonnegative(),
  status: z.enum(["goal", "budget", "aborted", "timeout"]),
});

export const SessionEndSchema = z.object({
  type: z.literal("session_end"),
  ...sequenced,
  metrics: SessionMetricsSchema,
});

export const ERROR_CODES = [
  "SessionNotFound",
  "SessionBusy",
  "ValidationError",
  "BadMessage",
  "BadVerb",
  "HumanTimeout",
  "SessionAborted",
] as const;

// errors carry no seq; they may arrive at any point in the stream
export const ErrorFrameSchema = z.object({
  type: z.literal("error"),
  code: z.enum(ERROR_CODES),
  message: z.string(),
});

export const ServerFrameSchema = z.discriminatedUnion("type", [
  SessionStartSchema,
  AgentTurnSchema,
  ReplyRequestSchema,
  TurnRewardSchema,
  SessionEndSchema,
  ErrorFrameSchema,
]);

export const JoinSchema = z.object({
  type: z.literal("join"),
  session_id: z.string(),
});

export const HumanReplySchema = z
  .object({
    type: z.literal("human_reply"),
    session_id: z.string(),
    enum_choice: z.string().optional(),
    content: z.string().optional(),
    fields: z.record(z.unknown()).optional(),
  })
  .refine(
    (reply) =>
      [reply.enum_choice, reply.content, reply.fields].filter(
        (value) => value !== undefined,
      ).length === 1,
    { message: "exactly one of enum_choice, content, fields" },
  );

export const ClientFrameSchema = z.union([JoinSchema, HumanReplySchema]);

export type ReplyField = z.infer<typeof ReplyFieldSchema>;
export type ReplySpec = z.infer<typeof ReplySpecSchema>;
export type SessionStart = z.infer<typeof SessionStartSchema>;
export type AgentTurn = z.infer<typeof AgentTurnSchema>;
export type ReplyRequest = z.infer<typeof ReplyRequestSchema>;
export type TurnReward = z.infer<typeof TurnRewardSchema>;
export type SessionMetrics = z.infer<typeof SessionMetricsSchema>;
export type SessionEnd = z.infer<typeof SessionEndSchema>;
export type ErrorFrame = z.infer<typeof ErrorFrameSchema>;
export type ServerFrame = z.infer<typeof ServerFrameSchema>;
export type Join = z.infer<typeof JoinSchema>;
export type HumanReply = z.infer<typeof HumanReplySchema>;

export type ParsedFrame =
  | { ok: true; frame: ServerFrame }
  | { ok: false; raw: unknown; issue: string };

export function parseServerFrame(raw: unknown): ParsedFrame {
  const result = ServerFrameSchema.safeParse(raw);
  if (result.success) {
    return { ok: true, frame: result.data };
  }
  return { ok: false, raw, issue: result.error.issues[0]?.message ?? "invalid frame" };
}

/** Decode one websocket text frame; bad JSON becomes a raw-inspection row. */
export function decodeFrame(data: string): ParsedFrame {
  let raw: unknown;
  try {
    raw = JSON.parse(data);
  } catch {
    return { ok: false, raw: data, issue: "not JSON" };
  }
  return parseServerFrame(raw);
}
