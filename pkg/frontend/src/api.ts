/** Thin typed client for the portal HTTP API. Every number shown in the
 * dashboard comes from one of these payloads; nothing is computed locally.
 */

export interface LayerGroup {
  pollutant: string;
  quantity: string;
  resolution: string;
  timestamps: string[];
}

export interface ModelValue {
  value: number | null;
  nodata: boolean;
  lat: number;
  lon: number;
}

export interface RegionalRow {
  region_id: string;
  timestamp: string;
  min: number;
  max: number;
  weighted_mean: number;
}

export interface ObservationSeries {
  station_id: string;
  pollutant: string;
  resolution: string;
  points: { timestamp: string; value: number }[];
}

export interface EvalPair {
  station_id: string;
  observed: number;
  predicted: number;
}

export interface Evaluation {
  pooled: {
    fac2: number;
    fb: number;
    nmse: number;
    n: number;
    pass_fac2: boolean;
    pass_fb: boolean;
    pass_nmse: boolean;
    accepted: boolean;
  } | null;
  pairs: EvalPair[];
}

export interface StationInfo {
  id: string;
  name: string;
  lat: number;
  lon: number;
}

export interface Overlay {
  objectUrl: string;
  bbox: [number, number, number, number]; // min_lon, min_lat, max_lon, max_lat
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

function query(params: Record<string, string | number | undefined>): string {
  const q = new URLSearchParams();
  for (const [k, v] of Object.entries(params)) {
    if (v !== undefined) q.set(k, String(v));
  }
  return q.toString();
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await fetch(this.base + path);
    if (!resp.ok) {
      let code = "http_error";
      let message = resp.statusText;
      try {
        const body = await resp.json();
        code = body.code ?? code;
        message = body.message ?? message;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, code, message);
    }
    return resp.json() as Promise<T>;
  }

  layers(): Promise<LayerGroup[]> {
    return this.getJson("/api/model/layers");
  }

  stations(region?: string): Promise<StationInfo[]> {
    const q = region ? `?${query({ region })}` : "";
    return this.getJson(`/api/stations${q}`);
  }

  autocomplete(q: string, limit = 8): Promise<string[]> {
    return this.getJson(`/api/geonames/autocomplete?${query({ q, limit })}`);
  }

  lookup(name: string): Promise<{ name: string; lat: number; lon: number }[]> {
    return this.getJson(`/api/geonames/lookup?${query({ name })}`);
  }

  value(p: {
    pollutant: string;
    quantity: string;
    resolution: string;
    date: string;
    lat: number;
    lon: number;
  }): Promise<ModelValue> {
    return this.getJson(`/api/model/value?${query(p)}`);
  }

  landcover(lat: number, lon: number, kind: string): Promise<{ class: string | null }> {
    return this.getJson(`/api/landcover?${query({ lat, lon, kind })}`);
  }

  regional(p: {
    region: string;
    pollutant: string;
    quantity: string;
    resolution: string;
  }): Promise<RegionalRow[]> {
    return this.getJson(`/api/model/regional?${query(p)}`);
  }

  regionalCsvUrl(p: {
    region: string;
    pollutant: string;
    quantity: string;
    resolution: string;
  }): string {
    return `${this.base}/api/model/regional?${query({ ...p, format: "csv" })}`;
  }

  observations(p: {
    station: string;
    pollutant: string;
    date: string;
    resolution: string;
  }): Promise<ObservationSeries> {
    return this.getJson(`/api/observations?${query(p)}`);
  }

  evaluation(p: {
    region: string;
    pollutant: string;
    resolution: string;
    date: string;
  }): Promise<Evaluation> {
    return this.getJson(`/api/evaluation?${query(p)}`);
  }

  timeseriesUrl(p: {
    pollutant: string;
    quantity: string;
    resolution: string;
    date: string;
    lat: number;
    lon: number;
  }): string {
    return `${this.base}/api/model/timeseries?${query(p)}`;
  }

  async overlay(p: {
    pollutant: string;
    quantity: string;
    resolution: string;
    date: string;
    format?: string;
  }): Promise<Overlay> {
    const resp = await fetch(
      `${this.base}/api/model/overlay?${query({ format: "png", ...p })}`,
    );
    if (!resp.ok) {
      throw new ApiError(resp.status, "overlay_unavailable", resp.statusText);
    }
    const bboxHeader = resp.headers.get("X-GAPS-BBox") ?? "";
    const parts = bboxHeader.split(",").map(Number);
    if (parts.length !== 4 || parts.some(Number.isNaN)) {
      throw new ApiError(500, "bad_bbox", `missing bounding box: ${bboxHeader}`);
    }
    const blob = await resp.blob();
    return {
      objectUrl: URL.createObjectURL(blob),
      bbox: parts as [number, number, number, number],
    };
  }
}

/** Discards out-of-order responses: only the most recently issued request
 * per channel resolves; earlier in-flight ones resolve to null.
 */
export class LatestOnly {
  private seq = new Map<string, number>();

  async run<T>(channel: string, task: () => Promise<T>): Promise<T | null> {
    const id = (this.seq.get(channel) ?? 0) + 1;
    this.seq.set(channel, id);
    const result = await task();
    return this.seq.get(channel) === id ? result : null;
  }
}
