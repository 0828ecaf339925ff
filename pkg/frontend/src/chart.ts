/** Dependency-free SVG charts.
 *
 * Every datum keeps its raw value in a data-value attribute so tests
 * (and curious users) can trace displayed numbers back to the API
 * payloads they came from.
 */

const SVG_NS = "http://www.w3.org/2000/svg";

export function formatNumber(value: number): string {
  return value.toPrecision(6);
}

function svgElement<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number>,
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, String(value));
  }
  return node;
}

export interface BarDatum {
  label: string;
  value: number;
}

/** Horizontal bar chart of labelled values (e.g. top interest weights). */
export function renderBarChart(container: HTMLElement, data: BarDatum[]): void {
  container.replaceChildren();
  if (data.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "nothing to show yet";
    container.append(empty);
    return;
  }
  const rowHeight = 22;
  const labelWidth = 180;
  const valueWidth = 90;
  const barSpan = 260;
  const width = labelWidth + barSpan + valueWidth;
  const height = data.length * rowHeight;
  const max = Math.max(...data.map((d) => d.value));
  const svg = svgElement("svg", {
    width,
    height,
    viewBox: `0 0 ${width} ${height}`,
    role: "img",
  });
  data.forEach((datum, index) => {
    const y = index * rowHeight;
    const label = svgElement("text", {
      x: labelWidth - 6,
      y: y + rowHeight / 2 + 4,
      "text-anchor": "end",
      class: "bar-label",
    });
    label.textContent = datum.label;
    const bar = svgElement("rect", {
      x: labelWidth,
      y: y + 4,
      width: max > 0 ? (datum.value / max) * barSpan : 0,
      height: rowHeight - 8,
      class: "bar",
      "data-concept": datum.label,
      "data-value": datum.value,
    });
    const value = svgElement("text", {
      x: labelWidth + barSpan + 6,
      y: y + rowHeight / 2 + 4,
      class: "bar-value",
      "data-concept": datum.label,
      "data-value": datum.value,
    });
    value.textContent = formatNumber(datum.value);
    svg.append(label, bar, value);
  });
  container.append(svg);
}

export interface Series {
  label: string;
  values: number[];
}

/** Line chart of one or more weight series over issued queries. */
export function renderSeriesChart(container: HTMLElement, series: Series[]): void {
  container.replaceChildren();
  const usable = series.filter((s) => s.values.length > 0);
  if (usable.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "no data for the selected concepts";
    container.append(empty);
    return;
  }
  const width = 520;
  const height = 200;
  const pad = 28;
  const steps = Math.max(...usable.map((s) => s.values.length));
  const top = Math.max(...usable.map((s) => Math.max(...s.values)));
  const x = (index: number): number =>
    steps === 1 ? width / 2 : pad + (index * (width - 2 * pad)) / (steps - 1);
  const y = (value: number): number =>
    top === 0 ? height - pad : height - pad - (value / top) * (height - 2 * pad);

  const svg = svgElement("svg", {
    width,
    height,
    viewBox: `0 0 ${width} ${height}`,
    role: "img",
  });
  svg.append(
    svgElement("line", {
      x1: pad, y1: height - pad, x2: width - pad, y2: height - pad, class: "axis",
    }),
  );
  usable.forEach((entry, seriesIndex) => {
    const path = entry.values
      .map((value, index) => `${index ? "L" : "M"}${x(index)},${y(value)}`)
      .join(" ");
    svg.append(
      svgElement("path", {
        d: path,
        class: `series series-${seriesIndex}`,
        fill: "none",
        "data-concept": entry.label,
      }),
    );
    entry.values.forEach((value, index) => {
      const dot = svgElement("circle", {
        cx: x(index),
        cy: y(value),
        r: 3,
        class: `dot series-${seriesIndex}`,
        "data-concept": entry.label,
        "data-step": index,
        "data-value": value,
      });
      svg.append(dot);
    });
  });
  container.append(svg);
}
