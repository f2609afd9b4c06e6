import init, { infer, surface, simulate } from "./pkg/cabinlight_wasm.js";

const $ = (id) => document.getElementById(id);
const HEAT_RES = 80;

function showError(e) {
  $("err").textContent = e ? String(e.message ?? e) : "";
}

function updatePoint() {
  $("dgi-v").textContent = $("dgi").value;
  $("age-v").textContent = $("age").value;
  try {
    const v = infer(+$("dgi").value, +$("age").value, $("activity").value, $("chronotype").value);
    $("intensity").textContent = v.toFixed(2) + " %";
    showError(null);
  } catch (e) {
    showError(e);
  }
}

function updateHeat() {
  let h;
  try {
    h = JSON.parse(surface($("activity").value, $("chronotype").value, HEAT_RES));
  } catch (e) {
    showError(e);
    return;
  }
  const canvas = $("heat");
  const ctx = canvas.getContext("2d");
  const n = h.age.length;
  const img = ctx.createImageData(h.dgi.length, n);
  h.values.forEach((v, idx) => {
    const i = Math.floor(idx / n);
    const j = idx % n;
    // dgi left to right, age bottom to top
    const p = ((n - 1 - j) * h.dgi.length + i) * 4;
    const g = Math.round((v / 100) * 255);
    img.data.set([g, Math.round(g * 0.9), Math.round(g * 0.6), 255], p);
  });
  const tmp = new OffscreenCanvas(h.dgi.length, n);
  tmp.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
  $("heat-info").textContent =
    `dgi ${h.dgi[0]}..${h.dgi.at(-1)} (x), age ${h.age[0]}..${h.age.at(-1)} (y)`;
}

function drawTrace(sim) {
  const canvas = $("trace");
  const ctx = canvas.getContext("2d");
  const { width: w, height: hgt } = canvas;
  const pad = 30;
  ctx.clearRect(0, 0, w, hgt);
  const n = sim.points.length;
  const x = (t) => pad + ((t - 1) / Math.max(n - 1, 1)) * (w - 2 * pad);
  const y = (v) => hgt - pad - (v / 100) * (hgt - 2 * pad);

  ctx.strokeStyle = "#ccc";
  ctx.strokeRect(pad, pad, w - 2 * pad, hgt - 2 * pad);
  ctx.fillStyle = "#666";
  ctx.fillText("100", 4, y(100) + 4);
  ctx.fillText("0", 4, y(0) + 4);
  ctx.fillText(`trial ${n}`, w - pad - 40, hgt - 10);

  ctx.setLineDash([4, 4]);
  ctx.strokeStyle = "#c33";
  ctx.beginPath();
  ctx.moveTo(pad, y(sim.preference));
  ctx.lineTo(w - pad, y(sim.preference));
  ctx.stroke();
  ctx.setLineDash([]);

  ctx.strokeStyle = "#2a6";
  ctx.beginPath();
  sim.points.forEach((p, k) => (k ? ctx.lineTo(x(p.trial), y(p.suggested)) : ctx.moveTo(x(p.trial), y(p.suggested))));
  ctx.stroke();

  if (sim.converged_at) {
    ctx.strokeStyle = "#36c";
    ctx.beginPath();
    ctx.moveTo(x(sim.converged_at), pad);
    ctx.lineTo(x(sim.converged_at), hgt - pad);
    ctx.stroke();
  }
}

function runSim() {
  $("eta-v").textContent = $("eta").value;
  try {
    const seed = Math.floor(Math.random() * 2 ** 32);
    const sim = JSON.parse(simulate(+$("set").value, +$("eta").value, $("policy").value.trim(), seed, 500));
    drawTrace(sim);
    $("sim-info").textContent = sim.converged_at
      ? `converged at trial ${sim.converged_at}, final ${sim.final_suggestion.toFixed(2)}`
      : `no convergence in ${sim.points.length} trials, final ${sim.final_suggestion.toFixed(2)}`;
    showError(null);
  } catch (e) {
    showError(e);
  }
}

await init();
for (const id of ["dgi", "age"]) $(id).addEventListener("input", updatePoint);
for (const id of ["activity", "chronotype"]) {
  $(id).addEventListener("change", () => {
    updatePoint();
    updateHeat();
  });
}
$("eta").addEventListener("input", () => ($("eta-v").textContent = $("eta").value));
$("run").addEventListener("click", runSim);
updatePoint();
updateHeat();
runSim();
