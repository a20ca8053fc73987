/** Typed client for the annotation service HTTP API. */

export interface VideoInfo {
  id: string;
  frames: number;
}

export interface SessionEvent {
  frame: number;
  delta: number;
}

export interface SessionState {
  video_id: string;
  initial: number | null;
  mode: string;
  events: SessionEvent[];
  frame_count: number;
  counts: number[] | null;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class AnnotationClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    private readonly baseUrl: string,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? globalThis.fetch.bind(globalThis);
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return response;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    return (await this.request(path, init)).json() as Promise<T>;
  }

  private static body(payload: unknown): RequestInit {
    return {
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    };
  }

  async listVideos(): Promise<VideoInfo[]> {
    const data = await this.json<{ videos: VideoInfo[] }>("/videos");
    return data.videos;
  }

  async frame(videoId: string, n: number): Promise<ArrayBuffer> {
    const response = await this.request(`/videos/${videoId}/frames/${n}`);
    return response.arrayBuffer();
  }

  getSession(videoId: string): Promise<SessionState> {
    return this.json(`/videos/${videoId}/session`);
  }

  async setInitial(videoId: string, count: number): Promise<void> {
    await this.json(`/videos/${videoId}/session/initial`, {
      method: "PUT",
      ...AnnotationClient.body({ count }),
    });
  }

  async setMode(videoId: string, mode: string): Promise<void> {
    await this.json(`/videos/${videoId}/session/mode`, {
      method: "PUT",
      ...AnnotationClient.body({ mode }),
    });
  }

  async postEvent(videoId: string, frame: number, delta: number): Promise<number> {
    const data = await this.json<{ count_at_frame: number }>(
      `/videos/${videoId}/session/events`,
      { method: "POST", ...AnnotationClient.body({ frame, delta }) },
    );
    return data.count_at_frame;
  }

  async undoEvent(videoId: string): Promise<number> {
    const data = await this.json<{ events: number }>(
      `/videos/${videoId}/session/events/last`,
      { method: "DELETE" },
    );
    return data.events;
  }

  async exportLabels(videoId: string): Promise<string> {
    const data = await this.json<{ path: string }>(
      `/videos/${videoId}/export`,
      { method: "POST" },
    );
    return data.path;
  }
}
