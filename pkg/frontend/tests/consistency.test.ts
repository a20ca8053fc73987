/**
 * UI/server consistency acceptance test.
 *
 * Spawns the real annotation service, replays a known event log two
 * ways — scripted playback through the UI controller stack
 * (Player + LiveSession) and direct HTTP calls — and requires the two
 * exported label tables to be identical.
 */

import { type ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { AnnotationClient } from "../src/api";
import { parseRgbp } from "../src/rgbp";
import { Player } from "../src/player";
import { LiveSession } from "../src/session";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;
const FRAME_COUNT = 12;

const SEED_FRAMES = `
import sys
from pathlib import Path
import numpy as np
from peoplecount.dataset_io import write_rgbp
from peoplecount.frames import PChannel, RGBPFrame
root = Path(sys.argv[1])
rng = np.random.default_rng(0)
for video in ("ui-video", "api-video"):
    vdir = root / video
    vdir.mkdir(parents=True)
    for i in range(${FRAME_COUNT}):
        rgb = rng.integers(0, 256, (8, 10, 3), dtype=np.uint8)
        p = (rng.random((8, 10)) < 0.2).astype(np.uint8)
        write_rgbp(RGBPFrame(rgb, PChannel(p), index=i), vdir / f"frame_{i:06d}.rgbp")
`;

// The known event log: initial count then +/- keystrokes at playhead frames.
const INITIAL = 2;
const SCRIPT: Array<[number, number]> = [
  [1, 1], [4, 1], [4, 1], [6, -1], [9, -1], [10, 1],
];

let root = "";
let server: ChildProcess | null = null;

async function waitForServer(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      const response = await fetch(`${BASE}/videos`);
      if (response.ok) {
        return;
      }
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  throw new Error("annotation service did not come up");
}

beforeAll(async () => {
  root = mkdtempSync(join(tmpdir(), "annotation-ui-"));
  execFileSync("python3", ["-c", SEED_FRAMES, root]);
  server = spawn(
    "peoplecount",
    ["serve-annotation", root, "--port", String(PORT)],
    { stdio: "ignore" },
  );
  await waitForServer();
}, 30000);

afterAll(() => {
  server?.kill();
  if (root) {
    rmSync(root, { recursive: true, force: true });
  }
});

describe("scripted playback consistency", () => {
  it("UI-driven labeling exports the same table as a direct API replay", async () => {
    // --- path 1: through the UI controller stack -------------------
    const client = new AnnotationClient(BASE);
    const videos = await client.listVideos();
    expect(videos.map((v) => v.id).sort()).toEqual(["api-video", "ui-video"]);

    const session = new LiveSession(client, "ui-video");
    await session.load();
    expect(session.frameCount).toBe(FRAME_COUNT);
    await session.setInitial(INITIAL);

    const keystrokes = new Map<number, number[]>();
    for (const [frame, delta] of SCRIPT) {
      keystrokes.set(frame, [...(keystrokes.get(frame) ?? []), delta]);
    }
    const accepted: Array<Promise<boolean>> = [];
    const player = new Player(FRAME_COUNT, 20, (frame) => {
      for (const delta of keystrokes.get(frame) ?? []) {
        accepted.push(session.adjust(frame, delta));
      }
    }, (fn) => setTimeout(fn, 0)); // scripted playback at full speed
    player.seek(0);
    player.play();
    while (player.playing) {
      await new Promise((resolve) => setTimeout(resolve, 1));
    }
    expect(player.frame).toBe(FRAME_COUNT - 1);
    await session.sync();
    expect(await Promise.all(accepted)).toEqual(SCRIPT.map(() => true));
    const uiExportPath = await session.export();

    // the drained queue must mirror the server at every playhead frame
    const state = await client.getSession("ui-video");
    for (let k = 0; k < FRAME_COUNT; k++) {
      expect(session.countAt(k)).toBe(state.counts?.[k]);
    }

    // --- path 2: direct API replay of the same event log -----------
    await fetch(`${BASE}/videos/api-video/session/initial`, {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ count: INITIAL }),
    });
    for (const [frame, delta] of SCRIPT) {
      const response = await fetch(`${BASE}/videos/api-video/session/events`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ frame, delta }),
      });
      expect(response.ok).toBe(true);
    }
    const exportResponse = await fetch(`${BASE}/videos/api-video/export`, {
      method: "POST",
    });
    const apiExportPath = (await exportResponse.json()).path as string;

    // --- identical label tables -------------------------------------
    const uiTable = readFileSync(uiExportPath, "utf-8");
    const apiTable = readFileSync(apiExportPath, "utf-8");
    expect(uiTable).toBe(apiTable);
    expect(uiTable.trim().split("\n")).toHaveLength(FRAME_COUNT + 1);
  }, 30000);

  it("serves frames the UI can decode", async () => {
    const client = new AnnotationClient(BASE);
    const image = parseRgbp(await client.frame("ui-video", 0));
    expect(image.width).toBe(10);
    expect(image.height).toBe(8);
  });
});
