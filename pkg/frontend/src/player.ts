/**
 * Frame-stepping playback clock.
 *
 * Pure timing logic with an injectable scheduler so tests can drive it
 * with fake timers and the scripted-consistency harness can run it at
 * full speed.
 */

export type Scheduler = (fn: () => void, ms: number) => unknown;
export type Canceler = (handle: unknown) => void;

export class Player {
  frame = 0;
  playing = false;
  speed = 1;
  private handle: unknown = null;

  constructor(
    readonly frameCount: number,
    readonly fps = 20,
    private readonly onFrame: (frame: number) => void = () => {},
    private readonly schedule: Scheduler = (fn, ms) => setTimeout(fn, ms),
    private readonly cancel: Canceler = (h) =>
      clearTimeout(h as ReturnType<typeof setTimeout>),
  ) {
    if (fps <= 0) {
      throw new RangeError("fps must be positive");
    }
  }

  /** Delay between displayed frames at the current speed. */
  get intervalMs(): number {
    return 1000 / (this.fps * this.speed);
  }

  get atEnd(): boolean {
    return this.frame >= this.frameCount - 1;
  }

  play(): void {
    if (this.playing || this.frameCount === 0 || this.atEnd) {
      return;
    }
    this.playing = true;
    this.tickLater();
  }

  pause(): void {
    this.playing = false;
    if (this.handle !== null) {
      this.cancel(this.handle);
      this.handle = null;
    }
  }

  seek(frame: number): void {
    const clamped = Math.min(Math.max(Math.trunc(frame), 0), this.frameCount - 1);
    this.frame = clamped;
    this.onFrame(this.frame);
  }

  setSpeed(speed: number): void {
    if (!(speed > 0)) {
      throw new RangeError("speed must be positive");
    }
    this.speed = speed;
    if (this.playing) {
      // restart the pending tick so the new cadence applies immediately
      if (this.handle !== null) {
        this.cancel(this.handle);
      }
      this.tickLater();
    }
  }

  private tickLater(): void {
    this.handle = this.schedule(() => this.tick(), this.intervalMs);
  }

  private tick(): void {
    if (!this.playing) {
      return;
    }
    this.frame += 1;
    this.onFrame(this.frame);
    if (this.atEnd) {
      this.playing = false;
      this.handle = null;
    } else {
      this.tickLater();
    }
  }
}
