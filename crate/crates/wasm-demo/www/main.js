import init, { block_spectrum, spectrum_hull, berezin } from "./pkg/toeplitz_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const canvas = $("plot");
const ctx = canvas.getContext("2d");

function symbolJson() {
  const kind = $("kind").value;
  const text = $("expr").value.trim();
  const profile = kind === "expression"
    ? { kind, expr: text }
    : { kind, p: JSON.parse(text.startsWith("[") ? text : `[${text}]`) };
  return JSON.stringify({ group: 1, profile, boundary_continuous: $("bc").checked });
}

function show(text, isError = false) {
  $("out").textContent = text;
  $("out").className = isError ? "err" : "";
}

function guarded(f) {
  return () => {
    try {
      f();
    } catch (e) {
      show(String(e), true);
    }
  };
}

function frame(xmin, ymin, extent) {
  const n = canvas.width;
  return {
    x: (re) => ((re - xmin) / extent) * n,
    y: (im) => n - ((im - ymin) / extent) * n,
    cell: n,
  };
}

function axes(f, xmin, ymin, extent) {
  ctx.strokeStyle = "#ccc";
  ctx.beginPath();
  if (ymin <= 0 && 0 <= ymin + extent) { ctx.moveTo(0, f.y(0)); ctx.lineTo(canvas.width, f.y(0)); }
  if (xmin <= 0 && 0 <= xmin + extent) { ctx.moveTo(f.x(0), 0); ctx.lineTo(f.x(0), canvas.height); }
  ctx.stroke();
}

function dots(f, points, color) {
  ctx.fillStyle = color;
  for (const [re, im] of points) {
    ctx.beginPath();
    ctx.arc(f.x(re), f.y(im), 2.5, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function paintRle(rle, color) {
  const n = rle.res;
  const h = canvas.width / n;
  ctx.fillStyle = color;
  let idx = 0;
  rle.runs.forEach((len, i) => {
    if (i % 2 === 1) {
      for (let c = idx; c < idx + len; c++) {
        const ix = c % n;
        const iy = Math.floor(c / n);
        ctx.fillRect(ix * h, canvas.height - (iy + 1) * h, Math.ceil(h), Math.ceil(h));
      }
    }
    idx += len;
  });
}

function bounds(points) {
  let [x0, x1, y0, y1] = [Infinity, -Infinity, Infinity, -Infinity];
  for (const [re, im] of points) {
    x0 = Math.min(x0, re); x1 = Math.max(x1, re);
    y0 = Math.min(y0, im); y1 = Math.max(y1, im);
  }
  const side = Math.max(x1 - x0, y1 - y0, 1e-3) * 1.2;
  return [(x0 + x1 - side) / 2, (y0 + y1 - side) / 2, side];
}

function runSpectrum() {
  const r = JSON.parse(block_spectrum(symbolJson(), +$("k").value, +$("dmax").value));
  const pts = r.points.map((p) => p.z);
  const [xmin, ymin, extent] = bounds(pts);
  const f = frame(xmin, ymin, extent);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  axes(f, xmin, ymin, extent);
  dots(f, pts, "#c0392b");
  const lines = r.points.map((p) => `d=${p.degree}  ${p.z[0].toFixed(6)} ${p.z[1] >= 0 ? "+" : "-"} ${Math.abs(p.z[1]).toFixed(6)}i  (x${p.multiplicity})`);
  show(lines.join("\n"));
}

function runHull() {
  const r = JSON.parse(spectrum_hull(symbolJson(), +$("k").value, +$("dmax").value, +$("res").value));
  const w = r.hull.rle.window;
  const f = frame(w.xmin, w.ymin, w.extent);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  paintRle(r.hull.rle, "#9dbbe3");
  paintRle(r.spectrum.rle, "#2c4f7c");
  axes(f, w.xmin, w.ymin, w.extent);
  dots(f, r.points, "#c0392b");
  show(`spectrum area ${r.spectrum.area.toFixed(4)}\nhull area     ${r.hull.area.toFixed(4)}\ncells in hull but not in spectrum: ${r.hull_minus_spectrum_cells}`);
}

function runBerezin() {
  const r = JSON.parse(berezin(symbolJson(), +$("k").value, $("w").value, $("degs").value));
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const n = canvas.width;
  const logs = r.errors.map((e) => Math.log10(Math.max(e, 1e-16)));
  const lo = Math.min(...logs) - 0.5;
  const hi = Math.max(...logs) + 0.5;
  const dmax = Math.max(...r.degrees);
  const px = (d) => 30 + (d / dmax) * (n - 60);
  const py = (l) => n - 30 - ((l - lo) / (hi - lo)) * (n - 60);
  ctx.strokeStyle = "#2c4f7c";
  ctx.beginPath();
  r.degrees.forEach((d, i) => (i ? ctx.lineTo(px(d), py(logs[i])) : ctx.moveTo(px(d), py(logs[i]))));
  ctx.stroke();
  ctx.fillStyle = "#333";
  r.degrees.forEach((d, i) => ctx.fillText(`d=${d}`, px(d) - 10, py(logs[i]) - 6));
  const lines = r.degrees.map((d, i) => `d=${d}  value ${r.values[i][0].toFixed(8)} ${r.values[i][1].toFixed(8)}i  |value - limit| ${r.errors[i].toExponential(3)}`);
  show(`limit c(w/|w|) = ${r.limit[0].toFixed(8)} ${r.limit[1].toFixed(8)}i\n` + lines.join("\n"));
}

await init();
$("run-spectrum").onclick = guarded(runSpectrum);
$("run-hull").onclick = guarded(runHull);
$("run-berezin").onclick = guarded(runBerezin);
guarded(runHull)();
