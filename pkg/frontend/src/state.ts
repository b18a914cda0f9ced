/** UI session state: a pure reducer over server messages and local sends.
 *
 * The invariant this file exists to keep: the *rendered* offset is always
 * the last server-acknowledged one. A click only sets pendingOffsetHz
 * (shown distinctly); the display value moves when a status message
 * confirms it. Reconnecting replays the greeting status and restores a
 * consistent view because state is just a fold over received messages.
 */

import type { ServerMessage } from './protocol';

export type ConnectionState = 'disconnected' | 'connecting' | 'connected';

export interface UiSessionView {
  connection: ConnectionState;
  sessionState: string | null;
  offsetHz: number | null; // last acknowledged
  pendingOffsetHz: number | null; // sent, awaiting acknowledgment
  mode: string | null;
  snrDb: number | null;
  quality: string | null;
  lastError: string | null;
  droppedFrames: number;
}

export type UiEvent =
  | { kind: 'connecting' }
  | { kind: 'open' }
  | { kind: 'close' }
  | { kind: 'server'; message: ServerMessage }
  | { kind: 'sent-tune'; offsetHz: number }
  | { kind: 'frame-dropped' };

export function initialView(): UiSessionView {
  return {
    connection: 'disconnected',
    sessionState: null,
    offsetHz: null,
    pendingOffsetHz: null,
    mode: null,
    snrDb: null,
    quality: null,
    lastError: null,
    droppedFrames: 0,
  };
}

export function reduce(view: UiSessionView, event: UiEvent): UiSessionView {
  switch (event.kind) {
    case 'connecting':
      return { ...view, connection: 'connecting' };
    case 'open':
      return { ...view, connection: 'connected', lastError: null };
    case 'close':
      return { ...view, connection: 'disconnected', pendingOffsetHz: null };
    case 'sent-tune':
      return { ...view, pendingOffsetHz: event.offsetHz };
    case 'frame-dropped':
      return { ...view, droppedFrames: view.droppedFrames + 1 };
    case 'server': {
      const msg = event.message;
      if (msg.type === 'error') {
        // the command was refused: clear the pending marker, keep tuning
        return { ...view, lastError: msg.message, pendingOffsetHz: null };
      }
      const acked = msg.offset_hz;
      const pendingResolved =
        view.pendingOffsetHz !== null && acked !== null && acked === view.pendingOffsetHz;
      return {
        ...view,
        sessionState: msg.state,
        offsetHz: acked,
        pendingOffsetHz: pendingResolved ? null : view.pendingOffsetHz,
        mode: msg.mode,
        snrDb: msg.snr_db,
        quality: msg.quality,
      };
    }
  }
}
