/**
 * DOM rendering for the console. Pure view layer over ConsoleSession:
 * rewards, observations, and termination always arrive from the server
 * and are displayed as-is.
 */
import { ReplyRequest } from "./protocol.js";
import { ConsoleSession, ReplyInput, TranscriptRow } from "./session.js";
import { ConnectionStatus } from "./transport.js";

export type SubmitHandler = (input: ReplyInput) => void;

const CRITERION_LEVELS = [1.0, 0.5, 0.0];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderRow(row: TranscriptRow): HTMLElement {
  switch (row.kind) {
    case "observation": {
      return el("li", "row observation", row.text);
    }
    case "agent": {
      const li = el("li", "row agent");
      li.append(
        el("span", "turn", `#${row.turnIndex}`),
        el("span", `verb verb-${row.verb}`, row.verb),
        el("span", "content", row.content),
      );
      return li;
    }
    case "reward": {
      const li = el("li", "row reward");
      li.append(
        el("span", "turn", `#${row.turnIndex}`),
        el("span", "value", `reward ${row.value}`),
        el("span", "content", row.observation),
      );
      if (row.done) li.append(el("span", "done", "session over"));
      return li;
    }
    case "error": {
      const li = el("li", "row error");
      li.append(el("span", "code", row.code), el("span", "content", row.message));
      return li;
    }
    case "raw": {
      // unknown frame types stay visible for inspection, never dropped
      const li = el("li", "row raw");
      li.append(
        el("span", "code", `unrecognized frame (${row.issue})`),
        el("pre", "content", JSON.stringify(row.frame, null, 2)),
      );
      return li;
    }
  }
}

function renderGroundTruth(session: ConsoleSession): HTMLElement {
  const pane = el("details", "ground-truth");
  pane.setAttribute("open", "");
  const summary = el("summary", undefined, "ground truth (human eyes only)");
  pane.append(summary, el("div", "watermark", "do not paste"));
  const list = el("dl");
  for (const [key, value] of Object.entries(session.groundTruth ?? {})) {
    list.append(
      el("dt", undefined, key),
      el("dd", undefined, typeof value === "string" ? value : JSON.stringify(value)),
    );
  }
  pane.append(list);
  return pane;
}

/** Guess how many criteria the judge prompt lists (numbered lines). */
function countCriteria(prompt: string): number {
  const numbered = prompt
    .split("\n")
    .filter((line) => /^\s*\d+[.)]/.test(line)).length;
  return numbered > 0 ? numbered : 3;
}

function enumWidget(request: ReplyRequest, submit: SubmitHandler): HTMLElement {
  const box = el("div", "widget widget-enum");
  const field = request.reply_spec.fields.find((f) => f.required && f.enum);
  for (const choice of field?.enum ?? []) {
    const button = el("button", "enum-choice", choice);
    button.addEventListener("click", () => submit({ enumChoice: choice }));
    box.append(button);
  }
  return box;
}

function criteriaWidget(request: ReplyRequest, submit: SubmitHandler): HTMLElement {
  const box = el("div", "widget widget-criteria");
  const count = countCriteria(request.prompt);
  const selects: HTMLSelectElement[] = [];
  for (let index = 0; index < count; index += 1) {
    const label = el("label", undefined, `criterion ${index + 1} `);
    const select = el("select");
    for (const level of CRITERION_LEVELS) {
      const option = el("option", undefined, level.toFixed(1));
      option.value = String(level);
      select.append(option);
    }
    selects.push(select);
    label.append(select);
    box.append(label);
  }
  const send = el("button", "submit", "send scores");
  send.addEventListener("click", () =>
    submit({ scores: selects.map((s) => Number(s.value)) }),
  );
  box.append(send);
  return box;
}

function formWidget(request: ReplyRequest, submit: SubmitHandler): HTMLElement {
  const box = el("div", "widget widget-form");
  const inputs = new Map<string, HTMLInputElement | HTMLSelectElement>();
  for (const field of request.reply_spec.fields) {
    const label = el("label", undefined, `${field.name}${field.required ? " *" : ""} `);
    if (field.enum) {
      const select = el("select");
      for (const choice of field.enum) {
        const option = el("option", undefined, choice);
        option.value = choice;
        select.append(option);
      }
      inputs.set(field.name, select);
      label.append(select);
    } else {
      const input = el("input");
      input.type = "text";
      inputs.set(field.name, input);
      label.append(input);
    }
    box.append(label);
  }
  const send = el("button", "submit", "send reply");
  send.addEventListener("click", () => {
    const fields: Record<string, unknown> = {};
    for (const [name, input] of inputs) {
      if (input.value) fields[name] = input.value;
    }
    submit({ fields });
  });
  box.append(send);
  return box;
}

function textWidget(submit: SubmitHandler): HTMLElement {
  const box = el("div", "widget widget-text");
  const area = el("textarea");
  area.rows = 3;
  const send = el("button", "submit", "send reply");
  send.addEventListener("click", () => submit({ text: area.value }));
  box.append(area, send);
  return box;
}

function renderPending(session: ConsoleSession, submit: SubmitHandler): HTMLElement {
  const pending = session.pending;
  const box = el("section", "pending");
  if (!pending) {
    box.append(el("p", "waiting", session.ended ? "session over" : "waiting for the agent..."));
    return box;
  }
  const { request, locked, inlineError } = pending;
  box.append(
    el("h3", undefined, `your turn as ${request.role} (turn ${request.turn_index})`),
    el("p", "prompt", request.prompt),
  );
  if (inlineError) {
    box.append(el("p", "inline-error", inlineError));
  }
  if (locked) {
    box.append(el("p", "locked", "reply sent, waiting for the server..."));
    return box;
  }
  const guarded: SubmitHandler = (input) => {
    try {
      submit(input);
    } catch (error) {
      pending.inlineError = String(error instanceof Error ? error.message : error);
    }
  };
  switch (request.reply_spec.kind) {
    case "enum":
      box.append(enumWidget(request, guarded));
      break;
    case "criteria":
      box.append(criteriaWidget(request, guarded));
      break;
    case "form":
      box.append(formWidget(request, guarded));
      break;
    case "text":
      box.append(textWidget(guarded));
      break;
  }
  return box;
}

function renderMetrics(session: ConsoleSession): HTMLElement {
  const metrics = session.metrics;
  const card = el("section", "metrics-card");
  if (!metrics) return card;
  card.append(el("h3", undefined, `session ${metrics.status}`));
  const list = el("dl");
  const rows: [string, string][] = [
    ["reward sum", metrics.reward_sum.toFixed(3)],
    ["effective turns", String(metrics.effective_turns)],
    ["time-weighted", metrics.time_weighted_performance.toFixed(3)],
    ["turns", String(metrics.turns)],
  ];
  for (const [key, value] of rows) {
    list.append(el("dt", undefined, key), el("dd", undefined, value));
  }
  card.append(list);
  return card;
}

export function render(
  root: HTMLElement,
  session: ConsoleSession,
  status: ConnectionStatus,
  submit: SubmitHandler,
): void {
  root.replaceChildren();
  const header = el("header");
  header.append(
    el("h2", undefined, `${session.gym ?? "?"} / ${session.sessionId}`),
    el("span", `status status-${status}`, status),
  );
  root.append(header);
  if (session.groundTruth) {
    root.append(renderGroundTruth(session));
  }
  const list = el("ol", "transcript");
  for (const row of session.transcript) {
    list.append(renderRow(row));
  }
  root.append(list, renderPending(session, submit));
  if (session.ended) {
    root.append(renderMetrics(session));
  }
}
