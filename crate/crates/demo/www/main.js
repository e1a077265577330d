import init, { selectBatches, learningCurves, drowsinessCurve } from "./pkg/albatch_demo.js";

const COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function guarded(errId, fn) {
  return () => {
    $(errId).textContent = "";
    try {
      fn();
    } catch (e) {
      $(errId).textContent = String(e);
    }
  };
}

// maps data coordinates onto a canvas with a margin
function frame(canvas, xs, ys, pad = 36) {
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const sx = (canvas.width - 2 * pad) / (x1 - x0 || 1);
  const sy = (canvas.height - 2 * pad) / (y1 - y0 || 1);
  return {
    x: (v) => pad + (v - x0) * sx,
    y: (v) => canvas.height - pad - (v - y0) * sy,
    x0, x1, y0, y1, pad,
  };
}

function axes(ctx, f, canvas) {
  ctx.strokeStyle = "#999";
  ctx.strokeRect(f.pad, f.pad, canvas.width - 2 * f.pad, canvas.height - 2 * f.pad);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  ctx.fillText(f.x0.toFixed(2), f.pad, canvas.height - f.pad + 14);
  ctx.fillText(f.x1.toFixed(2), canvas.width - f.pad - 24, canvas.height - f.pad + 14);
  ctx.fillText(f.y0.toFixed(3), 2, canvas.height - f.pad);
  ctx.fillText(f.y1.toFixed(3), 2, f.pad + 4);
}

function drawSelection() {
  const r = JSON.parse(selectBatches(JSON.stringify({
    strategy: $("sel-strategy").value,
    k: num("sel-k"),
    batches: num("sel-batches"),
    outlier_fraction: num("sel-outliers"),
    seed: num("sel-seed"),
  })));
  const canvas = $("sel-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const f = frame(canvas, r.points.map((p) => p[0]), r.points.map((p) => p[1]));
  axes(ctx, f, canvas);
  const black = new Set(r.blacklisted);
  const planted = new Set(r.planted_outliers);
  r.points.forEach((p, i) => {
    const b = r.batch[i];
    ctx.beginPath();
    ctx.arc(f.x(p[0]), f.y(p[1]), b ? 5 : 3, 0, 2 * Math.PI);
    ctx.fillStyle = b ? COLORS[(b - 1) % COLORS.length] : "#ccc";
    ctx.fill();
    if (black.has(i)) {
      ctx.strokeStyle = "#000";
      ctx.lineWidth = 2;
      ctx.stroke();
      ctx.lineWidth = 1;
    }
    if (planted.has(i)) {
      ctx.strokeStyle = "#d00";
      ctx.strokeRect(f.x(p[0]) - 6, f.y(p[1]) - 6, 12, 12);
    }
  });
  ctx.fillStyle = "#000";
  for (const c of r.init_centroids) {
    ctx.fillText("+", f.x(c[0]) - 3, f.y(c[1]) + 4);
  }
  const batches = Math.max(0, ...r.batch);
  $("sel-legend").innerHTML =
    Array.from({ length: batches }, (_, m) =>
      `<span><span class="swatch" style="background:${COLORS[m % COLORS.length]}"></span>batch ${m + 1}</span>`).join("") +
    `<span>black ring: blacklisted (${r.blacklisted.length})</span><span>red square: planted outlier</span><span>+: first-batch centroid</span>`;
}

function drawCurves() {
  const series = JSON.parse(learningCurves(JSON.stringify({
    strategies: $("lc-strategies").value.split(",").map((s) => s.trim()).filter(Boolean),
    subjects: num("lc-subjects"),
    runs: num("lc-runs"),
    batches: num("lc-batches"),
  })));
  const metric = $("lc-metric").value;
  const canvas = $("lc-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const f = frame(canvas, series.flatMap((s) => s.m), series.flatMap((s) => s[metric]));
  axes(ctx, f, canvas);
  series.forEach((s, j) => {
    ctx.strokeStyle = COLORS[j % COLORS.length];
    ctx.lineWidth = 2;
    ctx.beginPath();
    s.m.forEach((m, i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, f.x(m), f.y(s[metric][i])));
    ctx.stroke();
  });
  ctx.lineWidth = 1;
  $("lc-legend").innerHTML = series
    .map((s, j) => `<span><span class="swatch" style="background:${COLORS[j % COLORS.length]}"></span>${s.strategy}</span>`)
    .join("");
}

function drawDrowsiness() {
  const taus = $("dr-taus").value.split(",").map(Number).filter((v) => !Number.isNaN(v));
  const r = JSON.parse(drowsinessCurve(JSON.stringify({ tau0: num("dr-tau0"), window: num("dr-window"), taus })));
  const canvas = $("dr-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const half = canvas.width / 2;

  // left: the mapping; right: the series and its smoothed version
  const left = { width: half, height: canvas.height };
  const f = frame(left, r.grid_tau, [0, 1]);
  axes(ctx, f, left);
  ctx.strokeStyle = COLORS[0];
  ctx.beginPath();
  r.grid_tau.forEach((t, i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, f.x(t), f.y(r.grid_y[i])));
  ctx.stroke();

  ctx.save();
  ctx.translate(half, 0);
  const idx = r.y.map((_, i) => i);
  const g = frame(left, idx.length ? idx : [0, 1], [0, 1]);
  axes(ctx, g, left);
  [[r.y, COLORS[1]], [r.smoothed, COLORS[3]]].forEach(([ys, c]) => {
    ctx.strokeStyle = c;
    ctx.beginPath();
    ys.forEach((v, i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, g.x(i), g.y(v)));
    ctx.stroke();
  });
  ctx.restore();
}

await init();
$("sel-run").onclick = guarded("sel-err", drawSelection);
$("lc-run").onclick = guarded("lc-err", drawCurves);
$("dr-run").onclick = guarded("dr-err", drawDrowsiness);
guarded("sel-err", drawSelection)();
guarded("lc-err", drawCurves)();
guarded("dr-err", drawDrowsiness)();
