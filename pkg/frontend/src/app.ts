/**
 * DOM glue: canvas rendering, keyboard shortcuts, and the export
 * summary. All stateful logic lives in Player / LiveSession so this
 * layer stays a thin adapter.
 *
 * Keys: Space play/pause, arrows step, +/= and - adjust the count at
 * the playhead, u undoes the last event, digits set the initial count.
 */

import { AnnotationClient } from "./api.js";
import { countHistogram, formatHistogram, parseLabelCsv } from "./histogram.js";
import { Player } from "./player.js";
import { overlayForeground, parseRgbp } from "./rgbp.js";
import { LiveSession } from "./session.js";

interface Elements {
  canvas: HTMLCanvasElement;
  videoSelect: HTMLSelectElement;
  speedSelect: HTMLSelectElement;
  playButton: HTMLButtonElement;
  exportButton: HTMLButtonElement;
  frameLabel: HTMLElement;
  countLabel: HTMLElement;
  status: HTMLElement;
  summary: HTMLElement;
}

function element<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id}`);
  }
  return node as T;
}

export class App {
  private player: Player | null = null;
  private session: LiveSession | null = null;
  private readonly frameCache = new Map<number, ImageData>();

  constructor(
    private readonly client: AnnotationClient,
    private readonly ui: Elements,
  ) {}

  async start(): Promise<void> {
    const videos = await this.client.listVideos();
    for (const video of videos) {
      const option = document.createElement("option");
      option.value = video.id;
      option.textContent = `${video.id} (${video.frames} frames)`;
      this.ui.videoSelect.appendChild(option);
    }
    this.ui.videoSelect.addEventListener("change", () => {
      void this.openVideo(this.ui.videoSelect.value);
    });
    this.ui.speedSelect.addEventListener("change", () => {
      this.player?.setSpeed(Number(this.ui.speedSelect.value));
    });
    this.ui.playButton.addEventListener("click", () => this.togglePlay());
    this.ui.exportButton.addEventListener("click", () => {
      void this.exportLabels();
    });
    document.addEventListener("keydown", (event) => this.onKey(event));
    if (videos.length > 0) {
      this.ui.videoSelect.value = videos[0].id;
      await this.openVideo(videos[0].id);
    }
  }

  private async openVideo(videoId: string): Promise<void> {
    this.player?.pause();
    this.frameCache.clear();
    this.session = new LiveSession(this.client, videoId);
    await this.session.load();
    this.player = new Player(
      this.session.frameCount,
      20,
      (frame) => void this.showFrame(frame),
    );
    this.player.seek(0);
    this.refreshHud();
  }

  private togglePlay(): void {
    if (!this.player) {
      return;
    }
    if (this.player.playing) {
      this.player.pause();
    } else {
      this.player.play();
    }
    this.ui.playButton.textContent = this.player.playing ? "Pause" : "Play";
  }

  private onKey(event: KeyboardEvent): void {
    if (!this.player || !this.session) {
      return;
    }
    if (event.key === " ") {
      event.preventDefault();
      this.togglePlay();
    } else if (event.key === "ArrowRight") {
      this.player.seek(this.player.frame + 1);
    } else if (event.key === "ArrowLeft") {
      this.player.seek(this.player.frame - 1);
    } else if (event.key === "+" || event.key === "=") {
      this.postAdjust(1);
    } else if (event.key === "-") {
      this.postAdjust(-1);
    } else if (event.key === "u") {
      void this.session.undo().then(() => this.refreshHud());
    } else if (/^[0-9]$/.test(event.key)) {
      void this.session
        .setInitial(Number(event.key))
        .then(() => this.refreshHud());
    }
  }

  private postAdjust(delta: number): void {
    if (!this.player || !this.session || !this.session.canExport) {
      return;
    }
    const promise = this.session.adjust(this.player.frame, delta);
    this.refreshHud(); // optimistic value is already visible
    void promise.then((accepted) => {
      if (!accepted) {
        this.ui.status.textContent = this.session?.lastError ?? "rejected";
      }
      this.refreshHud();
    });
  }

  private async showFrame(frame: number): Promise<void> {
    if (!this.session) {
      return;
    }
    let image = this.frameCache.get(frame);
    if (!image) {
      const raw = parseRgbp(await this.client.frame(this.session.videoId, frame));
      image = new ImageData(overlayForeground(raw), raw.width, raw.height);
      this.frameCache.set(frame, image);
    }
    this.ui.canvas.width = image.width;
    this.ui.canvas.height = image.height;
    this.ui.canvas.getContext("2d")?.putImageData(image, 0, 0);
    this.refreshHud();
  }

  private refreshHud(): void {
    if (!this.player || !this.session) {
      return;
    }
    const frame = this.player.frame;
    this.ui.frameLabel.textContent =
      `frame ${frame + 1} / ${this.session.frameCount}`;
    const count = this.session.countAt(frame);
    this.ui.countLabel.textContent =
      count === null ? "count: press a digit to set" : `count: ${count}`;
    this.ui.exportButton.disabled = !this.session.canExport;
  }

  private async exportLabels(): Promise<void> {
    if (!this.session) {
      return;
    }
    const path = await this.session.export();
    // re-fetch the exported table and tally it client-side for the HUD
    const response = await fetch(path.startsWith("/") ? `file://${path}` : path)
      .catch(() => null);
    if (response && response.ok) {
      const hist = countHistogram(parseLabelCsv(await response.text()));
      this.ui.summary.textContent = formatHistogram(hist);
    } else {
      this.ui.summary.textContent = `exported to ${path}`;
    }
    this.ui.status.textContent = "export complete";
  }
}

export function boot(baseUrl: string): void {
  const app = new App(new AnnotationClient(baseUrl), {
    canvas: element<HTMLCanvasElement>("frame-canvas"),
    videoSelect: element<HTMLSelectElement>("video-select"),
    speedSelect: element<HTMLSelectElement>("speed-select"),
    playButton: element<HTMLButtonElement>("play-button"),
    exportButton: element<HTMLButtonElement>("export-button"),
    frameLabel: element("frame-label"),
    countLabel: element("count-label"),
    status: element("status-line"),
    summary: element("export-summary"),
  });
  void app.start();
}
