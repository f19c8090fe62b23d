// WebSocket frame stream for running simulations.

import type { FrameMessage, StreamMessage, SummaryMessage } from "./types";

export interface StreamHandlers {
  onFrame: (frame: FrameMessage) => void;
  onSummary: (summary: SummaryMessage) => void;
}

export function openFrameStream(
  wsBaseUrl: string,
  handlers: StreamHandlers,
  WebSocketImpl: typeof WebSocket = WebSocket,
): WebSocket {
  const ws = new WebSocketImpl(`${wsBaseUrl}/simulate/stream`);
  ws.onmessage = (event: MessageEvent) => {
    let message: StreamMessage;
    try {
      message = JSON.parse(String(event.data));
    } catch {
      return;
    }
    if (message.type === "frame") handlers.onFrame(message);
    else if (message.type === "summary") handlers.onSummary(message);
  };
  return ws;
}

export function wsBaseFrom(httpBase: string): string {
  if (httpBase.startsWith("https:")) return "wss:" + httpBase.slice(6);
  if (httpBase.startsWith("http:")) return "ws:" + httpBase.slice(5);
  return httpBase;
}
