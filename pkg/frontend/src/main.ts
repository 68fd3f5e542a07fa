/** DOM wiring for the preference console. One session per tab. */

import { SessionApi } from "./api.js";
import { SessionViewModel, jndContourLevel } from "./state.js";
import { drawHeatmap } from "./heatmap.js";

const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

function fmtConfig(native: number[], bounds: { low: number; high: number }[]): string {
  return native.map((v) => String(v)).join("  |  ");
}

async function boot(): Promise<void> {
  const api = new SessionApi("");
  const params = new URLSearchParams(window.location.search);
  let sessionId = params.get("session");
  if (!sessionId) {
    $("create-form").style.display = "block";
    $<HTMLButtonElement>("create-btn").onclick = async () => {
      const spec = JSON.parse($<HTMLTextAreaElement>("spec-input").value);
      const res = await api.createSession(spec);
      window.location.search = `?session=${res.id}`;
    };
    return;
  }
  const vm = new SessionViewModel(api, sessionId);
  await vm.refresh();
  render(vm);

  $<HTMLButtonElement>("btn-prefer-new").onclick = async () => {
    await vm.preferNew();
    render(vm);
  };
  $<HTMLButtonElement>("btn-prefer-prev").onclick = async () => {
    await vm.preferPrevious();
    render(vm);
  };
  $<HTMLButtonElement>("btn-cant-tell").onclick = async () => {
    await vm.cantTell();
    render(vm);
  };
  $<HTMLButtonElement>("btn-stop").onclick = async () => {
    if (window.confirm("Stop this run and mark the new candidate as not preferred?")) {
      await vm.stopRunFlawed();
      render(vm);
    }
  };
  $<HTMLButtonElement>("btn-next").onclick = async () => {
    render(vm, "fitting...");
    await vm.requestNext();
    render(vm);
  };
  $<HTMLSelectElement>("slice-axis").onchange = () => updateSlice(vm);
  $<HTMLInputElement>("slice-value").onchange = () => updateSlice(vm);
}

async function updateSlice(vm: SessionViewModel): Promise<void> {
  const axisSel = $<HTMLSelectElement>("slice-axis");
  const valueInput = $<HTMLInputElement>("slice-value");
  const axis = axisSel.value === "" ? null : Number(axisSel.value);
  const value = valueInput.value === "" ? null : Number(valueInput.value);
  await vm.selectSlice(axis, value);
  render(vm);
}

function render(vm: SessionViewModel, status?: string): void {
  const s = vm.summary;
  if (!s) return;
  $("session-title").textContent = `${s.name} (${s.id})`;
  $("phase").textContent = status ?? (vm.fitting ? "fitting..." : s.phase);
  $("gamma").textContent = s.gamma_hat === null ? "n/a" : s.gamma_hat.toFixed(4);

  // pending panel
  const pendingBox = $("pending-box");
  if (s.pending && "config_native" in s.pending) {
    pendingBox.style.display = "block";
    $("pending-config").textContent = fmtConfig(
      (s.pending as { config_native: number[] }).config_native,
      s.bounds,
    );
  } else if (s.pending) {
    pendingBox.style.display = "block";
    const p = s.pending as { prev_index: number; curr_index: number };
    const cfg = s.history[p.curr_index]?.config_native ?? [];
    $("pending-config").textContent = `initial sample #${p.curr_index + 1}: ${fmtConfig(cfg, s.bounds)}`;
  } else {
    pendingBox.style.display = "none";
  }
  for (const id of ["btn-prefer-new", "btn-prefer-prev", "btn-cant-tell", "btn-stop"]) {
    $<HTMLButtonElement>(id).disabled = !vm.canJudge;
  }
  $<HTMLButtonElement>("btn-next").disabled = !vm.canRequestNext;

  // history table (read-only, straight from the server)
  const tbody = $("history-body");
  tbody.innerHTML = "";
  for (const row of vm.history) {
    const tr = document.createElement("tr");
    const labelText = row.label === null ? "" : { "1": "new", "-1": "previous", "0": "same" }[String(row.label)];
    tr.innerHTML =
      `<td>${row.iteration + 1}</td><td>${fmtConfig(row.config_native, s.bounds)}</td>` +
      `<td>${row.kind}</td><td>${labelText ?? ""}</td>` +
      `<td>${new Date(row.timestamp * 1000).toLocaleTimeString()}</td>`;
    tbody.appendChild(tr);
  }

  // slice panel
  const canvas = $<HTMLCanvasElement>("slice-canvas");
  const placeholder = $("slice-placeholder");
  if (vm.slice) {
    placeholder.style.display = "none";
    canvas.style.display = "block";
    const level = jndContourLevel(vm.slice.p_zero_at_max, vm.slice.gamma_hat);
    const [fx, fy] = vm.slice.free_axes;
    const gx = vm.slice.axis_values[0];
    const gy = vm.slice.axis_values[1];
    const mx = vm.slice.maximizer_native[fx];
    const my = vm.slice.maximizer_native[fy];
    const cellX = ((mx - gx[0]) / (gx[gx.length - 1] - gx[0])) * (gx.length - 1);
    const cellY = ((my - gy[0]) / (gy[gy.length - 1] - gy[0])) * (gy.length - 1);
    // mean/p_zero arrive indexed [x][y]; transpose to rows = y for drawing
    const t = (g: number[][]) => g[0].map((_, j) => g.map((row) => row[j]));
    drawHeatmap(canvas, {
      mean: t(vm.slice.mean),
      pZero: t(vm.slice.p_zero),
      contourLevel: level,
      maximizer: [cellX, cellY],
    });
    $("slice-legend").textContent =
      level === null
        ? "no indifference contour (threshold is zero)"
        : `red contour: indifference probability ${level.toFixed(3)} (half of the at-maximizer value; display convention)`;
  } else {
    placeholder.style.display = "block";
    canvas.style.display = "none";
  }
  $("error-box").textContent = vm.lastError ?? "";
}

boot().catch((err) => {
  const box = document.getElementById("error-box");
  if (box) box.textContent = String(err);
});
