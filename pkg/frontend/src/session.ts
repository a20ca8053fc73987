/**
 * Client-side annotation session state.
 *
 * Keypresses update the displayed count optimistically and are posted
 * to the server through a serializing queue; a rejected event rolls the
 * display back. Once the queue drains, `countAt` mirrors the server's
 * materialization exactly.
 */

import { AnnotationClient } from "./api.js";

export interface PendingEvent {
  frame: number;
  delta: number;
}

export class LiveSession {
  initial: number | null = null;
  counts: number[] | null = null;
  frameCount = 0;
  readonly pending: PendingEvent[] = [];
  lastError: string | null = null;
  private chain: Promise<unknown> = Promise.resolve();

  constructor(
    private readonly client: AnnotationClient,
    readonly videoId: string,
  ) {}

  /** Refresh initial/counts/frameCount from the server. */
  async load(): Promise<void> {
    const state = await this.client.getSession(this.videoId);
    this.initial = state.initial;
    this.counts = state.counts;
    this.frameCount = state.frame_count;
  }

  /** Displayed count at a frame: server materialization plus pending deltas. */
  countAt(frame: number): number | null {
    if (this.initial === null) {
      return null;
    }
    const index = Math.min(Math.max(frame, 0), this.frameCount - 1);
    let count = this.counts ? this.counts[index] : this.initial;
    for (const event of this.pending) {
      if (event.frame <= frame) {
        count += event.delta;
      }
    }
    return count;
  }

  get canExport(): boolean {
    return this.initial !== null;
  }

  async setInitial(count: number): Promise<void> {
    await this.client.setInitial(this.videoId, count);
    await this.load();
  }

  /**
   * Optimistically apply a +1/-1 at `frame` and post it. Resolves true
   * if the server accepted the event, false if it was rolled back.
   */
  adjust(frame: number, delta: number): Promise<boolean> {
    const event: PendingEvent = { frame, delta };
    this.pending.push(event);
    const run = async (): Promise<boolean> => {
      try {
        await this.client.postEvent(this.videoId, frame, delta);
        if (this.counts) {
          for (let k = frame; k < this.frameCount; k++) {
            this.counts[k] += delta;
          }
        }
        return true;
      } catch (error) {
        this.lastError = String(error);
        return false;
      } finally {
        this.pending.splice(this.pending.indexOf(event), 1);
      }
    };
    const result = this.chain.then(run, run);
    this.chain = result;
    return result;
  }

  /** Pop the last accepted event server-side, then resync local state. */
  undo(): Promise<boolean> {
    const run = async (): Promise<boolean> => {
      try {
        await this.client.undoEvent(this.videoId);
        await this.load();
        return true;
      } catch (error) {
        this.lastError = String(error);
        return false;
      }
    };
    const result = this.chain.then(run, run);
    this.chain = result;
    return result;
  }

  /** Resolves once every queued post has settled. */
  async sync(): Promise<void> {
    await this.chain;
  }

  async export(): Promise<string> {
    if (!this.canExport) {
      throw new Error("set the initial count before exporting");
    }
    await this.sync();
    return this.client.exportLabels(this.videoId);
  }
}
