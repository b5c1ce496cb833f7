import init, { modeCurves, convergence, compare } from "./pkg/vanet_offload_web.js";

const COLORS = ["#555", "#2ca02c", "#1f77b4", "#ff7f0e", "#9467bd"];
const $ = (id) => document.getElementById(id);

function call(fn, request) {
  return JSON.parse(fn(JSON.stringify(request)));
}

// Draws line series on a canvas. Each series is {points: [[x, y|null]], color};
// null y values break the line.
function plot(canvas, series, xLabel, yLabel) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = { l: 64, r: 16, t: 12, b: 40 };
  ctx.clearRect(0, 0, w, h);
  const pts = series.flatMap((s) => s.points.filter((p) => p[1] !== null));
  if (pts.length === 0) return;
  const xs = pts.map((p) => p[0]);
  const ys = pts.map((p) => p[1]);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs) || 1];
  let [y0, y1] = [Math.min(0, ...ys), Math.max(...ys)];
  if (y1 === y0) y1 = y0 + 1;
  const sx = (x) => pad.l + ((x - x0) / (x1 - x0 || 1)) * (w - pad.l - pad.r);
  const sy = (y) => h - pad.b - ((y - y0) / (y1 - y0)) * (h - pad.t - pad.b);

  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#333";
  ctx.font = "12px sans-serif";
  ctx.beginPath();
  ctx.moveTo(pad.l, pad.t);
  ctx.lineTo(pad.l, h - pad.b);
  ctx.lineTo(w - pad.r, h - pad.b);
  ctx.stroke();
  for (let i = 0; i <= 4; i++) {
    const y = y0 + ((y1 - y0) * i) / 4;
    ctx.fillText(y.toPrecision(3), 4, sy(y) + 4);
    const x = x0 + ((x1 - x0) * i) / 4;
    ctx.fillText(x.toPrecision(3), sx(x) - 10, h - pad.b + 16);
  }
  ctx.fillText(xLabel, w / 2 - 40, h - 6);
  ctx.fillText(yLabel, pad.l + 6, pad.t + 10);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    let pen = false;
    for (const [x, y] of s.points) {
      if (y === null) {
        pen = false;
        continue;
      }
      pen ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y));
      pen = true;
    }
    ctx.stroke();
  }
}

function drawModeCurves() {
  const alpha = Number($("mc-alpha").value);
  const mu = Number($("mc-mu").value);
  $("mc-alpha-out").value = alpha;
  $("mc-mu-out").value = mu;
  const sizes = Array.from({ length: 91 }, (_, i) => 5 + i * 0.5);
  const curves = call(modeCurves, { alpha, mu, sharers: Number($("mc-sharers").value), sizes_mbit: sizes });
  $("mc-legend").innerHTML = curves
    .map((c) => `<span><i style="background:${COLORS[c.mode]}"></i>${c.mode}: ${c.name}</span>`)
    .join("");
  const series = curves.map((c) => ({
    color: COLORS[c.mode],
    points: sizes.map((s, i) => [s, c.overhead[i]]),
  }));
  plot($("mc-plot"), series, "task size (Mbit)", "overhead");
}

function fleetRequest(prefix) {
  const size = $(`${prefix}-size`);
  return {
    vehicles: Number($(`${prefix}-m`).value),
    seed: Number($(`${prefix}-seed`).value),
    size_mbit: size && size.value !== "" ? Number(size.value) : null,
    alpha: prefix === "cv" ? Number($("cv-alpha").value) : 0.5,
  };
}

function drawConvergence() {
  const [tm, como] = call(convergence, fleetRequest("cv"));
  const series = [
    { color: "#d62728", points: tm.moves.map((v, i) => [i, v]) },
    { color: "#1f77b4", points: como.moves.map((v, i) => [i, v]) },
  ];
  plot($("cv-plot"), series, "accepted move", "system overhead");
  $("cv-note").textContent =
    `TM: ${tm.moves.length - 1} moves over ${tm.sweeps.length - 1} sweeps, final ${tm.moves.at(-1).toFixed(1)}. ` +
    `COMO: ${como.moves.length - 1} moves over ${como.sweeps.length - 1} sweeps, final ${como.moves.at(-1).toFixed(1)}.`;
}

function drawComparison() {
  const rows = call(compare, fleetRequest("cmp"));
  const body = rows
    .map(
      (r) =>
        `<tr><th>${r.algorithm.toUpperCase()}</th><td>${r.total_overhead.toFixed(2)}</td>` +
        `<td>${(100 * r.reduction_vs_mec).toFixed(2)}%</td><td>${r.modes.join(" / ")}</td><td>${r.sweeps}</td></tr>`,
    )
    .join("");
  $("cmp-out").innerHTML =
    "<table><tr><th></th><th>total overhead</th><th>reduction vs MEC</th><th>vehicles in modes 0/1/2/3/4</th><th>sweeps</th></tr>" +
    body +
    "</table>";
}

function guarded(fn) {
  return () => {
    try {
      $("status").textContent = "";
      fn();
    } catch (e) {
      $("status").textContent = `Error: ${e.message ?? e}`;
      $("status").className = "error";
    }
  };
}

await init();
$("status").textContent = "";
for (const id of ["mc-alpha", "mc-mu", "mc-sharers"]) $(id).addEventListener("input", guarded(drawModeCurves));
$("cv-run").addEventListener("click", guarded(drawConvergence));
$("cmp-run").addEventListener("click", guarded(drawComparison));
guarded(drawModeCurves)();
guarded(drawConvergence)();
guarded(drawComparison)();
