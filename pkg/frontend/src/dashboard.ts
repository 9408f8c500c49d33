/** Concentration / Deposition dashboard: five input controls, a map with
 * an overlay + click popup, and the chart section. All displayed numbers
 * come verbatim from API payloads.
 */

import {
  ApiClient,
  EvalPair,
  LatestOnly,
  LayerGroup,
  Overlay,
} from "./api.js";
import { lineChart, scatterChart } from "./charts.js";

export type DashboardKind = "concentration" | "deposition";

export interface DashboardOptions {
  kind: DashboardKind;
  regions?: string[];
  debounceMs?: number;
}

export const DEFAULT_REGIONS = [
  "mainland",
  "norte",
  "centro",
  "lisboa",
  "alentejo",
  "algarve",
];

export interface DashboardState {
  kind: DashboardKind;
  region: string;
  locationText: string;
  layer: { pollutant: string; quantity: string } | null;
  resolution: string;
  dateIndex: number;
  opacity: number;
  marker: { lat: number; lon: number } | null;
}

function html<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function dateText(timestamp: string, resolution: string): string {
  if (resolution === "annual") return timestamp.slice(0, 4);
  if (resolution === "monthly") return timestamp.slice(0, 7);
  return timestamp.slice(0, 10);
}

export class Dashboard {
  readonly state: DashboardState;
  readonly root: HTMLElement;
  private layerGroups: LayerGroup[] = [];
  private overlayInfo: Overlay | null = null;
  private latest = new LatestOnly();
  private debounceMs: number;
  private debounceTimer: ReturnType<typeof setTimeout> | null = null;

  // control elements
  private banner!: HTMLElement;
  private regionSelect!: HTMLSelectElement;
  private locationInput!: HTMLInputElement;
  private suggestions!: HTMLUListElement;
  private layerSelect!: HTMLSelectElement;
  private resolutionSelect!: HTMLSelectElement;
  private dateSlider!: HTMLInputElement;
  private dateLabel!: HTMLElement;
  private opacitySlider!: HTMLInputElement;
  private mapEl!: HTMLElement;
  private overlayImg!: HTMLImageElement;
  private markerEl!: HTMLElement;
  private popupEl!: HTMLElement;
  private chartsEl!: HTMLElement;

  constructor(
    root: HTMLElement,
    readonly api: ApiClient,
    readonly options: DashboardOptions,
  ) {
    this.root = root;
    this.debounceMs = options.debounceMs ?? 250;
    this.state = {
      kind: options.kind,
      region: (options.regions ?? DEFAULT_REGIONS)[0],
      locationText: "",
      layer: null,
      resolution: "",
      dateIndex: 0,
      opacity: 0.7,
      marker: null,
    };
    this.buildSkeleton(options.regions ?? DEFAULT_REGIONS);
  }

  private get landcoverKind(): string {
    return this.state.kind === "concentration" ? "landuse" : "ecosystem";
  }

  private buildSkeleton(regions: string[]): void {
    this.root.classList.add("dashboard", this.state.kind);
    this.banner = html("div", { class: "error-banner", hidden: "" });
    this.root.appendChild(this.banner);

    const controls = html("form", { class: "controls" });
    controls.addEventListener("submit", (e) => e.preventDefault());

    const regionWrap = html("label", { "data-control": "region" }, "Region ");
    this.regionSelect = html("select");
    for (const r of regions) {
      this.regionSelect.appendChild(html("option", { value: r }, r));
    }
    this.regionSelect.addEventListener("change", () => {
      this.state.region = this.regionSelect.value;
      void this.refreshCharts();
    });
    regionWrap.appendChild(this.regionSelect);
    controls.appendChild(regionWrap);

    const locWrap = html("label", { "data-control": "location" }, "Location ");
    this.locationInput = html("input", { type: "text", placeholder: "type a place name" });
    this.suggestions = html("ul", { class: "suggestions" });
    this.locationInput.addEventListener("input", () => {
      this.state.locationText = this.locationInput.value;
      this.scheduleAutocomplete();
    });
    this.locationInput.addEventListener("keydown", (e) => {
      if ((e as KeyboardEvent).key === "Enter") {
        e.preventDefault();
        void this.geocode(this.locationInput.value);
      }
    });
    locWrap.appendChild(this.locationInput);
    locWrap.appendChild(this.suggestions);
    controls.appendChild(locWrap);

    const layerWrap = html("label", { "data-control": "layer" }, "Layer ");
    this.layerSelect = html("select");
    this.layerSelect.addEventListener("change", () => this.onLayerChange());
    layerWrap.appendChild(this.layerSelect);
    controls.appendChild(layerWrap);

    const resWrap = html("label", { "data-control": "resolution" }, "Resolution ");
    this.resolutionSelect = html("select");
    this.resolutionSelect.addEventListener("change", () => this.onResolutionChange());
    resWrap.appendChild(this.resolutionSelect);
    controls.appendChild(resWrap);

    const dateWrap = html("label", { "data-control": "date" }, "Date ");
    this.dateSlider = html("input", { type: "range", min: "0", max: "0", value: "0" });
    this.dateLabel = html("span", { class: "date-label" });
    this.dateSlider.addEventListener("input", () => {
      this.state.dateIndex = Number(this.dateSlider.value);
      this.dateLabel.textContent = this.currentDate() ?? "";
      void this.refreshOverlay();
      void this.refreshCharts();
    });
    dateWrap.appendChild(this.dateSlider);
    dateWrap.appendChild(this.dateLabel);
    controls.appendChild(dateWrap);

    this.root.appendChild(controls);

    const opacityWrap = html("label", { class: "opacity-control" }, "Opacity ");
    this.opacitySlider = html("input", {
      type: "range",
      min: "0",
      max: "100",
      value: String(Math.round(this.state.opacity * 100)),
    });
    this.opacitySlider.addEventListener("input", () => {
      this.state.opacity = Number(this.opacitySlider.value) / 100;
      this.overlayImg.style.opacity = String(this.state.opacity);
    });
    opacityWrap.appendChild(this.opacitySlider);
    this.root.appendChild(opacityWrap);

    this.mapEl = html("div", { class: "map" });
    this.overlayImg = html("img", { class: "overlay", alt: "model layer" });
    this.overlayImg.style.opacity = String(this.state.opacity);
    this.markerEl = html("div", { class: "marker", hidden: "" });
    this.popupEl = html("div", { class: "popup", hidden: "" });
    this.mapEl.appendChild(this.overlayImg);
    this.mapEl.appendChild(this.markerEl);
    this.mapEl.appendChild(this.popupEl);
    this.mapEl.addEventListener("click", (e) => this.onMapClick(e as MouseEvent));
    this.root.appendChild(this.mapEl);

    this.chartsEl = html("section", { class: "charts" });
    this.root.appendChild(this.chartsEl);
  }

  /** Fetch the layer list and render everything. */
  async init(): Promise<void> {
    try {
      const groups = await this.api.layers();
      const wanted = this.state.kind === "concentration" ? "concentration" : "deposition";
      this.layerGroups = groups.filter((g) => g.quantity === wanted);
      if (this.layerGroups.length === 0) {
        this.fail("no layers available for this dashboard");
        return;
      }
    } catch (err) {
      this.fail(`API unreachable: ${(err as Error).message}`);
      return;
    }
    const seen = new Set<string>();
    for (const g of this.layerGroups) {
      const key = `${g.pollutant}|${g.quantity}`;
      if (seen.has(key)) continue;
      seen.add(key);
      this.layerSelect.appendChild(
        html("option", { value: key }, `${g.pollutant} (${g.quantity})`),
      );
    }
    this.onLayerChange();
  }

  private fail(message: string): void {
    this.banner.textContent = message;
    this.banner.removeAttribute("hidden");
    for (const el of this.root.querySelectorAll("select, input")) {
      (el as HTMLInputElement).disabled = true;
    }
  }

  private groupsForLayer(): LayerGroup[] {
    const [pollutant, quantity] = this.layerSelect.value.split("|");
    return this.layerGroups.filter(
      (g) => g.pollutant === pollutant && g.quantity === quantity,
    );
  }

  private currentGroup(): LayerGroup | null {
    return (
      this.groupsForLayer().find((g) => g.resolution === this.state.resolution) ?? null
    );
  }

  currentDate(): string | null {
    const group = this.currentGroup();
    if (!group || group.timestamps.length === 0) return null;
    const i = Math.min(this.state.dateIndex, group.timestamps.length - 1);
    return dateText(group.timestamps[i], this.state.resolution);
  }

  private onLayerChange(): void {
    const [pollutant, quantity] = this.layerSelect.value.split("|");
    this.state.layer = { pollutant, quantity };
    this.resolutionSelect.textContent = "";
    for (const g of this.groupsForLayer()) {
      this.resolutionSelect.appendChild(
        html("option", { value: g.resolution }, g.resolution),
      );
    }
    this.onResolutionChange();
  }

  private onResolutionChange(): void {
    this.state.resolution = this.resolutionSelect.value;
    const group = this.currentGroup();
    const count = group ? group.timestamps.length : 0;
    // a new resolution has a new date range: reset the slider
    this.dateSlider.max = String(Math.max(count - 1, 0));
    this.dateSlider.value = "0";
    this.state.dateIndex = 0;
    this.dateLabel.textContent = this.currentDate() ?? "";
    void this.refreshOverlay();
    void this.refreshCharts();
  }

  private async refreshOverlay(): Promise<void> {
    const layer = this.state.layer;
    const date = this.currentDate();
    if (!layer || !date) return;
    try {
      const overlay = await this.latest.run("overlay", () =>
        this.api.overlay({
          pollutant: layer.pollutant,
          quantity: layer.quantity,
          resolution: this.state.resolution,
          date,
        }),
      );
      if (overlay === null) return; // a newer request superseded this one
      this.overlayInfo = overlay;
      this.overlayImg.src = overlay.objectUrl;
      this.overlayImg.setAttribute("data-bbox", overlay.bbox.join(","));
    } catch {
      this.overlayImg.removeAttribute("src");
      this.overlayInfo = null;
    }
  }

  private scheduleAutocomplete(): void {
    if (this.debounceTimer !== null) clearTimeout(this.debounceTimer);
    this.debounceTimer = setTimeout(() => {
      this.debounceTimer = null;
      void this.runAutocomplete();
    }, this.debounceMs);
  }

  private async runAutocomplete(): Promise<void> {
    const q = this.state.locationText.trim();
    if (q.length < 2) {
      this.suggestions.textContent = "";
      return;
    }
    const names = await this.latest.run("autocomplete", () => this.api.autocomplete(q));
    if (names === null) return;
    this.suggestions.textContent = "";
    for (const name of names) {
      const li = html("li", {}, name);
      li.addEventListener("click", () => void this.geocode(name));
      this.suggestions.appendChild(li);
    }
  }

  async geocode(name: string): Promise<void> {
    const hits = await this.api.lookup(name);
    if (hits.length === 0) return;
    this.suggestions.textContent = "";
    this.locationInput.value = hits[0].name;
    await this.placeMarker(hits[0].lat, hits[0].lon);
  }

  private onMapClick(e: MouseEvent): void {
    if (!this.overlayInfo) return;
    const rect = this.mapEl.getBoundingClientRect();
    if (rect.width === 0 || rect.height === 0) return;
    const [minLon, minLat, maxLon, maxLat] = this.overlayInfo.bbox;
    const fx = (e.clientX - rect.left) / rect.width;
    const fy = (e.clientY - rect.top) / rect.height;
    const lon = minLon + fx * (maxLon - minLon);
    const lat = maxLat - fy * (maxLat - minLat);
    void this.placeMarker(lat, lon);
  }

  /** Set the marker and fill the popup from the value/landcover endpoints. */
  async placeMarker(lat: number, lon: number): Promise<void> {
    this.state.marker = { lat, lon };
    this.markerEl.removeAttribute("hidden");
    this.markerEl.setAttribute("data-lat", String(lat));
    this.markerEl.setAttribute("data-lon", String(lon));
    const layer = this.state.layer;
    const date = this.currentDate();
    if (!layer || !date) return;
    const result = await this.latest.run("popup", async () => {
      const [value, cover] = await Promise.all([
        this.api.value({
          pollutant: layer.pollutant,
          quantity: layer.quantity,
          resolution: this.state.resolution,
          date,
          lat,
          lon,
        }),
        this.api.landcover(lat, lon, this.landcoverKind),
      ]);
      return { value, cover };
    });
    if (result === null) return;
    this.popupEl.textContent = "";
    this.popupEl.removeAttribute("hidden");
    this.popupEl.appendChild(
      html("div", { class: "popup-coords" }, `${lat.toFixed(4)}, ${lon.toFixed(4)}`),
    );
    this.popupEl.appendChild(
      html(
        "div",
        { class: "popup-value" },
        result.value.nodata ? "no data" : String(result.value.value),
      ),
    );
    this.popupEl.appendChild(
      html("div", { class: "popup-class" }, result.cover.class ?? "unclassified"),
    );
    const link = html("a", {
      class: "popup-timeseries",
      href: this.api.timeseriesUrl({
        pollutant: layer.pollutant,
        quantity: layer.quantity,
        resolution: this.state.resolution,
        date: date.slice(0, 4),
        lat,
        lon,
      }),
      download: "",
    });
    link.textContent = "download temporal variation";
    this.popupEl.appendChild(link);
  }

  /** Rebuild the chart section for the current selection. */
  async refreshCharts(): Promise<void> {
    const layer = this.state.layer;
    const date = this.currentDate();
    if (!layer || !date) return;
    const region = this.state.region;
    const resolution = this.state.resolution;
    const payload = await this.latest.run("charts", async () => {
      const regional = await this.api.regional({
        region,
        pollutant: layer.pollutant,
        quantity: layer.quantity,
        resolution,
      });
      if (this.state.kind !== "concentration") {
        return { regional, observations: null, evaluation: null };
      }
      const stations = await this.api.stations(region);
      const observations =
        stations.length > 0
          ? await this.api.observations({
              station: stations[0].id,
              pollutant: layer.pollutant,
              date: date.slice(0, 4),
              resolution,
            })
          : null;
      const evaluation = await this.api
        .evaluation({ region, pollutant: layer.pollutant, resolution, date })
        .catch(() => null);
      return { regional, observations, evaluation };
    });
    if (payload === null) return;

    this.chartsEl.textContent = "";
    if (this.state.kind === "concentration") {
      const obsChart = html("div", { class: "chart observations-chart" });
      obsChart.appendChild(html("h3", {}, "Observed concentrations"));
      obsChart.appendChild(
        lineChart(
          "observed",
          (payload.observations?.points ?? []).map((p) => ({
            label: p.timestamp,
            value: p.value,
          })),
        ),
      );
      this.chartsEl.appendChild(obsChart);
    }

    const regionalChart = html("div", { class: "chart regional-chart" });
    regionalChart.appendChild(html("h3", {}, "Model predictions (regional mean)"));
    regionalChart.appendChild(
      lineChart(
        "regional mean",
        payload.regional.map((r) => ({ label: r.timestamp, value: r.weighted_mean })),
      ),
    );
    const csv = html("a", {
      class: "download-csv",
      href: this.api.regionalCsvUrl({
        region,
        pollutant: layer.pollutant,
        quantity: layer.quantity,
        resolution,
      }),
      download: "",
    });
    csv.textContent = "download table (CSV)";
    regionalChart.appendChild(csv);
    this.chartsEl.appendChild(regionalChart);

    if (this.state.kind === "concentration") {
      const scatter = html("div", { class: "chart scatter-chart" });
      scatter.appendChild(html("h3", {}, "Observations vs model"));
      const pairs: EvalPair[] = payload.evaluation?.pairs ?? [];
      scatter.appendChild(
        scatterChart(
          "evaluation",
          pairs.map((p) => ({
            label: p.station_id,
            observed: p.observed,
            predicted: p.predicted,
          })),
        ),
      );
      const flags = html("div", { class: "eval-flags" });
      const pooled = payload.evaluation?.pooled ?? null;
      if (pooled) {
        flags.appendChild(
          html(
            "span",
            { class: pooled.accepted ? "accepted" : "rejected" },
            pooled.accepted ? "accepted" : "rejected",
          ),
        );
        flags.appendChild(
          html("span", { class: "metric" }, `FAC2 ${pooled.fac2}`),
        );
        flags.appendChild(html("span", { class: "metric" }, `FB ${pooled.fb}`));
        flags.appendChild(
          html("span", { class: "metric" }, `NMSE ${pooled.nmse}`),
        );
      } else {
        flags.textContent = "no evaluation available";
      }
      scatter.appendChild(flags);
      this.chartsEl.appendChild(scatter);
    }
  }
}

export function createDashboard(
  root: HTMLElement,
  api: ApiClient,
  options: DashboardOptions,
): Dashboard {
  return new Dashboard(root, api, options);
}
