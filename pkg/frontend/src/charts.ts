/** Minimal dependency-free SVG charts. Values are plotted verbatim from
 * API payloads; no aggregation happens here.
 */

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 420;
const HEIGHT = 220;
const PAD = 36;

function svgRoot(title: string): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("role", "img");
  svg.setAttribute("aria-label", title);
  return svg;
}

function el(name: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, name);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

function scale(
  values: number[],
): { lo: number; hi: number; map: (v: number, px0: number, px1: number) => number } {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  return {
    lo,
    hi,
    map: (v, px0, px1) => px0 + ((v - lo) / (hi - lo)) * (px1 - px0),
  };
}

export interface SeriesPoint {
  label: string;
  value: number;
}

export function lineChart(title: string, points: SeriesPoint[]): SVGSVGElement {
  const svg = svgRoot(title);
  if (points.length === 0) {
    const t = el("text", { x: String(WIDTH / 2), y: String(HEIGHT / 2), "text-anchor": "middle", class: "placeholder" });
    t.textContent = "no data";
    svg.appendChild(t);
    return svg;
  }
  const ys = scale(points.map((p) => p.value));
  const step = points.length > 1 ? (WIDTH - 2 * PAD) / (points.length - 1) : 0;
  const coords = points.map((p, i) => [
    PAD + i * step,
    HEIGHT - PAD - (ys.map(p.value, 0, HEIGHT - 2 * PAD)),
  ]);
  svg.appendChild(
    el("polyline", {
      points: coords.map(([x, y]) => `${x},${y}`).join(" "),
      fill: "none",
      class: "series",
    }),
  );
  coords.forEach(([x, y], i) => {
    const c = el("circle", { cx: String(x), cy: String(y), r: "3", class: "point" });
    c.setAttribute("data-value", String(points[i].value));
    c.setAttribute("data-label", points[i].label);
    svg.appendChild(c);
  });
  const axis = el("text", { x: String(PAD), y: "14", class: "axis" });
  axis.textContent = `${title} (${ys.lo.toFixed(2)} .. ${ys.hi.toFixed(2)})`;
  svg.appendChild(axis);
  return svg;
}

export interface ScatterPair {
  label: string;
  observed: number;
  predicted: number;
}

/** Observed-vs-predicted scatter with identity and factor-of-two guides. */
export function scatterChart(title: string, pairs: ScatterPair[]): SVGSVGElement {
  const svg = svgRoot(title);
  if (pairs.length === 0) {
    const t = el("text", { x: String(WIDTH / 2), y: String(HEIGHT / 2), "text-anchor": "middle", class: "placeholder" });
    t.textContent = "no pairs";
    svg.appendChild(t);
    return svg;
  }
  const all = pairs.flatMap((p) => [p.observed, p.predicted]);
  const s = scale([0, ...all]);
  const px = (v: number) => PAD + ((v - s.lo) / (s.hi - s.lo)) * (WIDTH - 2 * PAD);
  const py = (v: number) => HEIGHT - PAD - ((v - s.lo) / (s.hi - s.lo)) * (HEIGHT - 2 * PAD);
  const guides: [number, string][] = [
    [1, "identity"],
    [2, "factor2"],
    [0.5, "factor2"],
  ];
  for (const [slope, cls] of guides) {
    svg.appendChild(
      el("line", {
        x1: String(px(s.lo)),
        y1: String(py(s.lo * slope)),
        x2: String(px(s.hi)),
        y2: String(py(s.hi * slope)),
        class: `guide ${cls}`,
        "data-slope": String(slope),
      }),
    );
  }
  for (const p of pairs) {
    const c = el("circle", {
      cx: String(px(p.observed)),
      cy: String(py(p.predicted)),
      r: "4",
      class: "pair",
    });
    c.setAttribute("data-observed", String(p.observed));
    c.setAttribute("data-predicted", String(p.predicted));
    c.setAttribute("data-label", p.label);
    svg.appendChild(c);
  }
  const axis = el("text", { x: String(PAD), y: "14", class: "axis" });
  axis.textContent = `${title} (observed vs predicted)`;
  svg.appendChild(axis);
  return svg;
}
