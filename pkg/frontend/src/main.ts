/** Tuner UI wiring: WebSocket, waterfall canvas, controls, audio. */

import { PcmPlayer, webAudioContext } from './audio';
import {
  decodeFrame,
  parseServerText,
  setGainCommand,
  setModeCommand,
  startRxCommand,
  stopCommand,
  tuneCommand,
} from './protocol';
import { initialView, reduce, UiSessionView } from './state';
import { pixelToOffsetHz, snapToStep } from './tuning';
import { WaterfallModel } from './waterfall';

const $ = <T extends HTMLElement>(id: string): T => document.getElementById(id) as T;

const canvas = $<HTMLCanvasElement>('waterfall');
const ctx2d = canvas.getContext('2d', { alpha: false })!;
const axis = $('axis');
const statusLine = $('status-line');
const offsetReadout = $('offset-readout');
const snrReadout = $('snr-readout');
const droppedReadout = $('dropped-readout');
const modeSelect = $<HTMLSelectElement>('mode');
const gainSlider = $<HTMLInputElement>('gain');
const gainValue = $('gain-value');
const stepSelect = $<HTMLSelectElement>('step');
const startBtn = $<HTMLButtonElement>('start');
const stopBtn = $<HTMLButtonElement>('stop');
const muteBtn = $<HTMLButtonElement>('mute');

let view: UiSessionView = initialView();
const waterfall = new WaterfallModel();
let ws: WebSocket | null = null;
let player: PcmPlayer | null = null;
let muted = false;
let pixels: ImageData | null = null;

function dispatch(event: Parameters<typeof reduce>[1]): void {
  view = reduce(view, event);
  renderStatus();
}

function renderStatus(): void {
  statusLine.textContent =
    view.connection === 'connected'
      ? `${view.sessionState ?? '...'}`
      : view.connection;
  const pending =
    view.pendingOffsetHz !== null ? ` (pending ${fmtHz(view.pendingOffsetHz)})` : '';
  offsetReadout.textContent = `${view.offsetHz === null ? '--' : fmtHz(view.offsetHz)}${pending}`;
  offsetReadout.classList.toggle('pending', view.pendingOffsetHz !== null);
  snrReadout.textContent =
    view.snrDb === null ? '--' : `${view.snrDb.toFixed(1)} dB ${view.quality ?? ''}`;
  droppedReadout.textContent = String(view.droppedFrames);
  if (view.lastError) statusLine.textContent += ` | ${view.lastError}`;
  const connected = view.connection === 'connected';
  for (const el of [modeSelect, gainSlider, stepSelect, startBtn, stopBtn]) {
    (el as HTMLButtonElement).disabled = !connected;
  }
}

function fmtHz(hz: number): string {
  return Math.abs(hz) >= 1e6 ? `${(hz / 1e6).toFixed(3)} MHz` : `${(hz / 1e3).toFixed(1)} kHz`;
}

function renderWaterfall(): void {
  if (!pixels || pixels.width !== canvas.width || pixels.height !== canvas.height) {
    pixels = ctx2d.createImageData(canvas.width, canvas.height);
  }
  waterfall.render(pixels.data, canvas.width, canvas.height);
  ctx2d.putImageData(pixels, 0, 0);
  axis.textContent = waterfall
    .axisLabels()
    .map((l) => fmtHz(l.frequencyHz))
    .join('        ');
  requestAnimationFrame(renderWaterfall);
}

function connect(): void {
  const url = `ws://${location.hostname || '127.0.0.1'}:${
    new URLSearchParams(location.search).get('port') ?? '8765'
  }`;
  dispatch({ kind: 'connecting' });
  ws = new WebSocket(url);
  ws.binaryType = 'arraybuffer';
  ws.onopen = () => dispatch({ kind: 'open' });
  ws.onclose = () => {
    dispatch({ kind: 'close' });
    setTimeout(connect, 1000); // reconnect; greeting status restores the view
  };
  ws.onmessage = (ev) => {
    if (typeof ev.data === 'string') {
      const msg = parseServerText(ev.data);
      if (msg) dispatch({ kind: 'server', message: msg });
      return;
    }
    // binary frames decode off the critical path of state handling
    const frame = decodeFrame(ev.data as ArrayBuffer);
    if (!frame) {
      dispatch({ kind: 'frame-dropped' });
      return;
    }
    if (frame.kind === 'spectrum') {
      waterfall.push(frame.frame);
    } else if (!muted) {
      if (!player) player = new PcmPlayer(webAudioContext(new AudioContext()));
      player.enqueue(frame.frame.pcm);
    }
  };
}

canvas.addEventListener('click', (ev) => {
  if (!ws || view.connection !== 'connected' || waterfall.spanHz === 0) return;
  const rect = canvas.getBoundingClientRect();
  const raw = pixelToOffsetHz(ev.clientX - rect.left, rect.width, waterfall.spanHz);
  const snapped = snapToStep(raw, Number(stepSelect.value));
  ws.send(tuneCommand(snapped));
  dispatch({ kind: 'sent-tune', offsetHz: snapped });
});

modeSelect.addEventListener('change', () => ws?.send(setModeCommand(modeSelect.value)));
gainSlider.addEventListener('change', () => {
  gainValue.textContent = `${gainSlider.value} dB`;
  ws?.send(setGainCommand(Number(gainSlider.value)));
});
startBtn.addEventListener('click', () => ws?.send(startRxCommand()));
stopBtn.addEventListener('click', () => ws?.send(stopCommand('all')));
muteBtn.addEventListener('click', () => {
  muted = !muted;
  muteBtn.textContent = muted ? 'unmute' : 'mute';
  player?.reset();
});

connect();
renderStatus();
requestAnimationFrame(renderWaterfall);
