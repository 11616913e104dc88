import init, { fit_band, curvature, compare_wiener } from "./pkg/utilgasp_wasm.js";

const $ = (id) => document.getElementById(id);

function frame(canvas, xs, ys) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const pad = 30;
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y1 === y0) { y0 -= 1; y1 += 1; }
  const sx = (x) => pad + (x - x0) / (x1 - x0 || 1) * (canvas.width - 2 * pad);
  const sy = (y) => canvas.height - pad - (y - y0) / (y1 - y0) * (canvas.height - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, canvas.width - 2 * pad, canvas.height - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.fillText(y1.toPrecision(3), 2, pad);
  ctx.fillText(y0.toPrecision(3), 2, canvas.height - pad);
  ctx.fillText(x0.toPrecision(3), pad, canvas.height - 10);
  ctx.fillText(x1.toPrecision(3), canvas.width - pad - 30, canvas.height - 10);
  return { ctx, sx, sy };
}

function line(p, xs, ys, color, dash = []) {
  const { ctx, sx, sy } = p;
  ctx.strokeStyle = color;
  ctx.setLineDash(dash);
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(sx(x), sy(ys[i])) : ctx.moveTo(sx(x), sy(ys[i]))));
  ctx.stroke();
  ctx.setLineDash([]);
}

function band(p, xs, lo, hi, color) {
  const { ctx, sx, sy } = p;
  ctx.fillStyle = color;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(sx(x), sy(hi[i])) : ctx.moveTo(sx(x), sy(hi[i]))));
  for (let i = xs.length - 1; i >= 0; i--) ctx.lineTo(sx(xs[i]), sy(lo[i]));
  ctx.closePath();
  ctx.fill();
}

function dots(p, xs, ys) {
  const { ctx, sx, sy } = p;
  ctx.fillStyle = "#000";
  xs.forEach((x, i) => { ctx.beginPath(); ctx.arc(sx(x), sy(ys[i]), 3, 0, 7); ctx.fill(); });
}

function guarded(f) {
  return () => {
    $("status").textContent = "";
    try { f(); } catch (e) { $("status").textContent = String(e.message ?? e); }
  };
}

function drawFit() {
  const v = JSON.parse(fit_band($("csv").value, $("basis").value, $("noisy").checked, 201));
  const xs = v.band.map((b) => b.x);
  const lo = v.band.map((b) => b.lo95), hi = v.band.map((b) => b.hi95);
  const p = frame($("fitplot"), xs, lo.concat(hi, v.us));
  band(p, xs, lo, hi, "rgba(40, 100, 200, 0.2)");
  line(p, xs, v.band.map((b) => b.mean), "#2864c8");
  dots(p, v.xs, v.us);
  $("fitinfo").textContent =
    `gamma ${v.gamma.toPrecision(4)}  sigma2 ${v.sigma2.toPrecision(4)}  nugget ${v.nugget.toPrecision(3)}`;
}

function showCurvature() {
  const v = JSON.parse(curvature($("csv").value, $("basis").value, $("noisy").checked, 1000));
  const r = v.report;
  const lam = v.lambda.filter(([, l]) => l !== null);
  $("fitinfo").textContent =
    `${r.label}: concave on ${(100 * r.proportion_concave).toFixed(1)}% of ${r.grid_size} points, ` +
    `convex on ${(100 * r.proportion_convex).toFixed(1)}%\n` +
    `risk aversion at ${lam.length} points: ` +
    lam.filter((_, i) => i % 20 === 0).map(([x, l]) => `${x.toPrecision(3)}: ${l.toPrecision(3)}`).join(", ");
}

function drawComparison() {
  const v = JSON.parse(compare_wiener(Number($("n").value)));
  const pts = v.points, xs = pts.map((q) => q.x);
  const all = pts.flatMap((q) => [q.gasp_lo95, q.gasp_hi95, q.wiener_lo95, q.wiener_hi95, q.truth]);
  const p = frame($("cmpplot"), xs, all);
  band(p, xs, pts.map((q) => q.wiener_lo95), pts.map((q) => q.wiener_hi95), "rgba(200, 80, 40, 0.15)");
  band(p, xs, pts.map((q) => q.gasp_lo95), pts.map((q) => q.gasp_hi95), "rgba(40, 100, 200, 0.2)");
  line(p, xs, pts.map((q) => q.truth), "#000", [4, 3]);
  line(p, xs, pts.map((q) => q.wiener_mean), "#c85028");
  line(p, xs, pts.map((q) => q.gasp_mean), "#2864c8");
  $("cmpinfo").textContent =
    `MSE: GaSP ${v.gasp_mse.toExponential(2)}, Wiener ${v.wiener_mse.toExponential(2)}\n` +
    `95% coverage: GaSP ${(100 * v.gasp_coverage).toFixed(1)}%, Wiener ${(100 * v.wiener_coverage).toFixed(1)}%`;
}

await init();
$("fit").onclick = guarded(drawFit);
$("curv").onclick = guarded(showCurvature);
$("cmp").onclick = guarded(drawComparison);
guarded(drawFit)();
