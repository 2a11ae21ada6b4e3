/** DOM bootstrap: renders the controller state into index.html. */

import { ServiceClient } from "./api.js";
import { PARAMS, type ParamName } from "./bounds.js";
import { buildChart, type ChartData } from "./chart.js";
import { formatVaf } from "./gauges.js";
import { TuningApp } from "./app.js";

const app = new TuningApp(new ServiceClient(""));

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function buildSliders(): void {
  const host = el<HTMLDivElement>("sliders");
  for (const spec of PARAMS) {
    const row = document.createElement("div");
    row.className = "param-row";
    row.innerHTML = `
      <label for="in-${spec.name}">${spec.label} (${spec.unit})</label>
      <input type="range" id="in-${spec.name}" min="${spec.min}" max="${spec.max}" step="${spec.step}" value="0">
      <input type="number" id="num-${spec.name}" min="${spec.min}" max="${spec.max}" step="${spec.step}" value="0">
      <span class="bounds">[${spec.min}, ${spec.max}]</span>
    `;
    host.appendChild(row);
    const range = row.querySelector<HTMLInputElement>(`#in-${spec.name}`)!;
    const num = row.querySelector<HTMLInputElement>(`#num-${spec.name}`)!;
    const handler = (raw: string) => app.setField(spec.name, Number(raw));
    range.addEventListener("input", () => handler(range.value));
    num.addEventListener("input", () => handler(num.value));
  }
}

function drawChart(canvas: HTMLCanvasElement, data: ChartData): void {
  const ctx = canvas.getContext("2d")!;
  const { width, height } = canvas;
  const margin = { left: 48, right: 12, top: 24, bottom: 28 };
  ctx.clearRect(0, 0, width, height);
  ctx.font = "12px sans-serif";
  ctx.fillStyle = "#333";
  ctx.fillText(data.title, margin.left, 14);
  const plotW = width - margin.left - margin.right;
  const plotH = height - margin.top - margin.bottom;
  const sx = (x: number) => margin.left + (x / 100) * plotW;
  const sy = (y: number) =>
    margin.top + plotH - ((y - data.yMin) / (data.yMax - data.yMin)) * plotH;
  ctx.strokeStyle = "#999";
  ctx.strokeRect(margin.left, margin.top, plotW, plotH);
  ctx.fillText(data.xLabel, margin.left + plotW / 2 - 30, height - 8);
  for (const series of data.series) {
    ctx.beginPath();
    ctx.setLineDash(series.dashed ? [6, 4] : []);
    ctx.strokeStyle = series.dashed ? "#c0392b" : "#2c3e50";
    series.points.forEach((p, i) => {
      if (i === 0) {
        ctx.moveTo(sx(p.x), sy(p.y));
      } else {
        ctx.lineTo(sx(p.x), sy(p.y));
      }
    });
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function render(): void {
  for (const spec of PARAMS) {
    const field = app.form.field(spec.name);
    const range = el<HTMLInputElement>(`in-${spec.name}`);
    const num = el<HTMLInputElement>(`num-${spec.name}`);
    if (document.activeElement !== range && document.activeElement !== num) {
      range.value = String(field.value);
      num.value = String(field.value);
    }
    num.classList.toggle("invalid", !field.valid);
  }
  const standRow = el<HTMLInputElement>("num-stand_to_sit_pct").closest(".param-row");
  standRow?.classList.toggle("hidden", !app.form.splitSitStand);

  el<HTMLSpanElement>("dirty").textContent = app.form.dirty ? "modified" : "in sync";
  el<HTMLSpanElement>("separation").textContent =
    `sit/stand separation ${app.form.separation().toFixed(0)} / 60`;
  el<HTMLSpanElement>("separation").classList.toggle("invalid", !app.form.separationOk());

  const generate = el<HTMLButtonElement>("generate");
  generate.disabled = app.state.busy || !app.form.canSubmit();
  generate.textContent = app.state.busy ? "Generating…" : "Generate Model";

  const banner = el<HTMLDivElement>("banner");
  banner.textContent = app.state.banner ?? "";
  banner.classList.toggle("hidden", !app.state.banner);
  const toast = el<HTMLDivElement>("toast");
  toast.textContent = app.state.toast ?? "";
  toast.classList.toggle("hidden", !app.state.toast);

  el<HTMLSpanElement>("walltime").textContent =
    app.state.wallTimeS === null ? "" : `last regeneration ${app.state.wallTimeS.toFixed(2)} s`;

  const gaugeHost = el<HTMLDivElement>("gauges");
  gaugeHost.innerHTML = "";
  for (const gauge of app.state.gauges) {
    const div = document.createElement("div");
    div.className = "gauge" + (gauge.belowFloor ? " below-floor" : "");
    const floor = gauge.floor === null ? "" : ` (floor ${gauge.floor})`;
    div.innerHTML = `
      <div class="gauge-bar"><div class="gauge-fill" style="width:${100 * gauge.needle}%"></div>
      ${gauge.floor === null ? "" : `<div class="gauge-floor" style="left:${100 * gauge.floor}%"></div>`}</div>
      <span>${gauge.joint}: ${formatVaf(gauge.value)}${floor}</span>
    `;
    gaugeHost.appendChild(div);
  }

  if (app.state.preview) {
    drawChart(el<HTMLCanvasElement>("chart"), buildChart(app.state.preview, "commanded"));
    drawChart(el<HTMLCanvasElement>("chart-ref"), buildChart(app.state.preview, "reference"));
  }

  const select = el<HTMLSelectElement>("profile-select");
  const current = select.value;
  select.innerHTML = "<option value=''>load profile…</option>";
  for (const saved of app.state.savedProfiles) {
    const option = document.createElement("option");
    option.value = saved.id;
    option.textContent = `${saved.name} (${saved.id})`;
    select.appendChild(option);
  }
  select.value = current;
}

function wireControls(): void {
  el<HTMLButtonElement>("generate").addEventListener("click", () => {
    void app.regenerateAndRefresh();
  });
  el<HTMLButtonElement>("save").addEventListener("click", () => {
    app.form.name = el<HTMLInputElement>("profile-name").value || "untitled";
    void app.saveProfile();
  });
  el<HTMLSelectElement>("profile-select").addEventListener("change", (event) => {
    const id = (event.target as HTMLSelectElement).value;
    if (id) {
      void app.loadProfile(id);
    }
  });
  el<HTMLInputElement>("split").addEventListener("change", (event) => {
    app.setSplit((event.target as HTMLInputElement).checked);
  });
  el<HTMLSelectElement>("preset-param").innerHTML = PARAMS.map(
    (spec) => `<option value="${spec.name}">${spec.label}</option>`,
  ).join("");
  el<HTMLButtonElement>("preset-high").addEventListener("click", () => {
    void app.loadPreset(el<HTMLSelectElement>("preset-param").value as ParamName, "HIGH");
  });
  el<HTMLButtonElement>("preset-low").addEventListener("click", () => {
    void app.loadPreset(el<HTMLSelectElement>("preset-param").value as ParamName, "LOW");
  });
  el<HTMLSelectElement>("preview-joint").addEventListener("change", (event) => {
    void app.setPreviewJoint((event.target as HTMLSelectElement).value);
  });
  el<HTMLButtonElement>("export").addEventListener("click", () => {
    void app
      .saveProfile()
      .then(() => app["client"].exportBundle("exported.bundle.json"))
      .then((out) => {
        app.state.toast = `exported ${out.path} (${out.digest.slice(0, 12)})`;
        render();
      })
      .catch((error) => {
        app.state.banner = String(error);
        render();
      });
  });
}

app.onChange(render);
buildSliders();
wireControls();
void app.start();
