/**
 * Websocket plumbing: join on open, auto-rejoin on connection loss.
 *
 * The server replays a session's full frame log on every rejoin and the
 * session state machine dedupes by seq, so reconnecting is always safe.
 * The socket implementation is injectable: browsers pass the native
 * WebSocket, tests pass the `ws` package.
 */

export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((event: unknown) => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: ((event: unknown) => void) | null;
  onerror: ((event: unknown) => void) | null;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export type ConnectionStatus = "connecting" | "open" | "rejoining" | "closed";

export interface BridgeClientOptions {
  url: string;
  sessionId: string;
  onFrame: (data: string) => void;
  onStatus?: (status: ConnectionStatus) => void;
  makeSocket?: WebSocketFactory;
  rejoinDelayMs?: number;
  maxRejoins?: number;
}

const defaultFactory: WebSocketFactory = (url) =>
  new WebSocket(url) as unknown as WebSocketLike;

export class BridgeClient {
  private readonly options: Required<Omit<BridgeClientOptions, "onStatus">> & {
    onStatus: (status: ConnectionStatus) => void;
  };
  private socket: WebSocketLike | null = null;
  private opened = false;
  private stopped = false;
  private rejoins = 0;
  private rejoinTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(options: BridgeClientOptions) {
    this.options = {
      makeSocket: defaultFactory,
      rejoinDelayMs: 1000,
      maxRejoins: Number.POSITIVE_INFINITY,
      onStatus: () => undefined,
      ...options,
    };
  }

  connect(): void {
    this.options.onStatus(this.rejoins > 0 ? "rejoining" : "connecting");
    const socket = this.options.makeSocket(this.options.url);
    this.socket = socket;
    socket.onopen = () => {
      this.opened = true;
      socket.send(
        JSON.stringify({ type: "join", session_id: this.options.sessionId }),
      );
      this.options.onStatus("open");
    };
    socket.onmessage = (event) => {
      this.options.onFrame(String(event.data));
    };
    socket.onerror = () => {
      // the close handler owns recovery; errors always precede a close
    };
    socket.onclose = () => {
      this.opened = false;
      if (this.socket === socket) {
        this.socket = null;
        this.scheduleRejoin();
      }
    };
  }

  /** Send one client frame; silently drops when the socket is down (the
   * pending request survives server-side and the UI stays unlocked). */
  send(frame: object): boolean {
    if (!this.socket || !this.opened) {
      return false;
    }
    this.socket.send(JSON.stringify(frame));
    return true;
  }

  get connected(): boolean {
    return this.opened;
  }

  stop(): void {
    this.stopped = true;
    if (this.rejoinTimer !== null) {
      clearTimeout(this.rejoinTimer);
      this.rejoinTimer = null;
    }
    const socket = this.socket;
    this.socket = null;
    socket?.close();
    this.options.onStatus("closed");
  }

  private scheduleRejoin(): void {
    if (this.stopped || this.rejoins >= this.options.maxRejoins) {
      this.options.onStatus("closed");
      return;
    }
    this.rejoins += 1;
    this.options.onStatus("rejoining");
    this.rejoinTimer = setTimeout(() => {
      this.rejoinTimer = null;
      if (!this.stopped) {
        this.connect();
      }
    }, this.options.rejoinDelayMs);
  }
}
