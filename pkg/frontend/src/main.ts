/** Browser bootstrap: wire the form inputs to a session and a bridge client. */
import { ConsoleSession, ReplyInput } from "./session.js";
import { BridgeClient, ConnectionStatus } from "./transport.js";
import { render } from "./ui.js";

const root = document.getElementById("console") as HTMLElement;
const form = document.getElementById("connect-form") as HTMLFormElement;
const urlInput = document.getElementById("server-url") as HTMLInputElement;
const sessionInput = document.getElementById("session-id") as HTMLInputElement;

let session: ConsoleSession | null = null;
let client: BridgeClient | null = null;
let status: ConnectionStatus = "closed";

function rerender(): void {
  if (session) render(root, session, status, submitReply)
}

function submitReply(input: ReplyInput): void {
  if (!session || !client) return;
  try {
    const frame = session.buildReply(input);
    if (!client.send(frame) && session.pending) {
      session.pending.locked = false;
      session.pending.inlineError = "connection lost, try again after rejoin";
    }
  } catch (error) {
    if (session.pending) {
      session.pending.inlineError = String(
        error instanceof Error ? error.message : error,
      );
    }
  }
  rerender();
}

form.addEventListener("submit", (event) => {
  event.preventDefault();
  client?.stop();
  session = new ConsoleSession(sessionInput.value.trim());
  client = new BridgeClient({
    url: urlInput.value.trim(),
    sessionId: session.sessionId,
    onFrame: (data) => {
      session?.ingest(data);
      rerender();
    },
    onStatus: (next) => {
      status = next;
      rerender();
    },
  });
  client.connect();
  rerender();
});
