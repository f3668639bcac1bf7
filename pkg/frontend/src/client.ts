// Connection layer: one WebSocket consumer updates the view state, commands
// are fire-and-forget with acknowledgment observed in later snapshots. The
// socket constructor is injected so tests can run under Node.

import { Command, DepotMapView, Snapshot } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onopen: (() => void) | null;
  readyState: number;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientEvents {
  onSnapshot(snap: Snapshot): void;
  onClose(): void;
  onError(reason: string): void;
}

export class DashboardClient {
  private socket: SocketLike | null = null;
  private reconnectAttempts = 0;
  private closedByUser = false;

  constructor(
    private baseUrl: string,
    private events: ClientEvents,
    private makeSocket: SocketFactory,
    private fetchImpl: typeof fetch = fetch,
  ) {}

  get wsUrl(): string {
    return this.baseUrl.replace(/^http/, "ws") + "/ws";
  }

  connect(): void {
    this.closedByUser = false;
    const sock = this.makeSocket(this.wsUrl);
    this.socket = sock;
    sock.onopen = () => {
      this.reconnectAttempts = 0;
    };
    sock.onmessage = (ev) => {
      try {
        const parsed = JSON.parse(String(ev.data));
        if (parsed && typeof parsed.tick === "number") {
          this.events.onSnapshot(parsed as Snapshot);
        } else if (parsed && parsed.error) {
          this.events.onError(String(parsed.error));
        }
      } catch {
        // a malformed frame never takes the dashboard down
      }
    };
    sock.onclose = () => {
      this.events.onClose();
      if (!this.closedByUser) this.scheduleReconnect();
    };
  }

  private scheduleReconnect(): void {
    const delay = Math.min(500 * 2 ** this.reconnectAttempts, 5000);
    this.reconnectAttempts += 1;
    setTimeout(() => {
      if (!this.closedByUser) this.connect();
    }, delay);
  }

  close(): void {
    this.closedByUser = true;
    this.socket?.close();
  }

  /** Command over the socket; throws when the connection is down. */
  sendCommand(command: Command): void {
    if (!this.socket || this.socket.readyState !== 1) {
      throw new Error("not connected");
    }
    this.socket.send(JSON.stringify(command));
  }

  async issueEstop(target: string): Promise<void> {
    this.sendCommand({ kind: "estop", target });
  }

  async issueRelease(target: string): Promise<void> {
    this.sendCommand({ kind: "estop_release", target });
  }

  async fetchMap(): Promise<DepotMapView> {
    const res = await this.fetchImpl(this.baseUrl + "/map");
    if (!res.ok) throw new Error(`map fetch failed: ${res.status}`);
    return (await res.json()) as DepotMapView;
  }
}
