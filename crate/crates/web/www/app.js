import init, { phase_portrait, havok_reconstruction, sindy_fit } from "./pkg/msd_web.js";

const $ = (id) => document.getElementById(id);

function call(f, ...args) {
  try {
    return JSON.parse(f(...args));
  } catch (e) {
    return { error: String(e) };
  }
}

function bounds(values) {
  let lo = Infinity, hi = -Infinity;
  for (const v of values) { if (v < lo) lo = v; if (v > hi) hi = v; }
  const pad = 0.05 * (hi - lo || 1);
  return [lo - pad, hi + pad];
}

function polyline(ctx, xs, ys, xr, yr, color) {
  const { width: w, height: h } = ctx.canvas;
  const sx = (x) => ((x - xr[0]) / (xr[1] - xr[0])) * w;
  const sy = (y) => h - ((y - yr[0]) / (yr[1] - yr[0])) * h;
  ctx.strokeStyle = color;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(sx(x), sy(ys[i])) : ctx.moveTo(sx(x), sy(ys[i]))));
  ctx.stroke();
}

function drawPortrait() {
  const periods = Number($("pp-periods").value);
  $("pp-periods-v").textContent = periods;
  const ctx = $("pp-canvas").getContext("2d");
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  const r = call(phase_portrait, $("pp-system").value, 256, periods);
  if (r.error) { ctx.fillText(r.error, 10, 20); return; }
  polyline(ctx, r.x, r.y, bounds(r.x), bounds(r.y), "#1f5fa8");
  ctx.fillStyle = "#444";
  ctx.fillText(`${r.names[1]} vs ${r.names[0]}`, 8, 14);
}

function drawHavok() {
  const rank = Number($("hv-rank").value);
  $("hv-rank-v").textContent = rank;
  const ctx = $("hv-canvas").getContext("2d");
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  const r = call(havok_reconstruction, $("hv-system").value, 64, rank);
  if (r.error) { $("hv-info").textContent = r.error; return; }
  const xr = [r.t[0], r.t[r.t.length - 1]];
  const yr = bounds(r.truth);
  polyline(ctx, r.t, r.truth, xr, yr, "#999");
  polyline(ctx, r.t, r.prediction, xr, yr, "#c0392b");
  const split = ((r.t[r.train_len] - xr[0]) / (xr[1] - xr[0])) * ctx.canvas.width;
  ctx.strokeStyle = "#2a2";
  ctx.beginPath(); ctx.moveTo(split, 0); ctx.lineTo(split, ctx.canvas.height); ctx.stroke();
  $("hv-info").textContent =
    `grey: truth, red: model; forecast right of the green line. ` +
    `normalized RMSE train ${r.train_rmse.toExponential(2)}, forecast ${r.test_rmse.toExponential(2)}`;
}

function runSindy() {
  const threshold = 10 ** Number($("sy-threshold").value);
  $("sy-threshold-v").textContent = threshold.toPrecision(2);
  const r = call(sindy_fit, $("sy-system").value, threshold, 4096);
  $("sy-out").textContent = r.error
    ? r.error
    : `${r.equations.join("\n")}\n\n${r.nonzero} terms, true support ${r.support_match ? "recovered" : "missed"}`;
}

await init();
for (const [ids, f] of [
  [["pp-system", "pp-periods"], drawPortrait],
  [["hv-system", "hv-rank"], drawHavok],
  [["sy-system", "sy-threshold"], runSindy],
]) {
  ids.forEach((id) => $(id).addEventListener("input", f));
  f();
}
