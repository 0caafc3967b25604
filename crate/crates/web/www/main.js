import init, { stencil, symbolGrid, noisyStripes, restore } from "./pkg/adlbr_web.js";

const $ = (id) => document.getElementById(id);
const SIDE = 96;
const SYMBOL_RES = 128;

function params() {
  return {
    kappa: Math.pow(10, Number($("kappa").value)),
    theta: Number($("theta").value),
    scheme: $("scheme").value,
  };
}

function drawOffsets(report) {
  const svg = $("offsets");
  const radius = Math.max(2, Math.ceil(report.radius));
  const step = 120 / radius;
  let html = "";
  for (let k = -radius; k <= radius; k++) {
    html += `<line x1="${k * step}" y1="-125" x2="${k * step}" y2="125" stroke-opacity="0.15"/>`;
    html += `<line x1="-125" y1="${k * step}" x2="125" y2="${k * step}" stroke-opacity="0.15"/>`;
  }
  const wmax = Math.max(...report.entries.map((e) => e.weight));
  for (const e of report.entries) {
    for (const s of [1, -1]) {
      const [x, y] = [s * e.offset[0] * step, -s * e.offset[1] * step];
      const r = 3 + 6 * Math.sqrt(e.weight / wmax);
      html += `<circle cx="${x}" cy="${y}" r="${r}" fill="#2a6"/>`;
    }
  }
  html += `<circle cx="0" cy="0" r="4" fill="#222"/>`;
  svg.innerHTML = html;
}

function updateStencil() {
  const p = params();
  $("kappa-out").textContent = p.kappa.toFixed(2);
  $("theta-out").textContent = p.theta.toFixed(2);
  const report = JSON.parse(stencil(p.kappa, p.theta, p.scheme));
  const rows = report.entries
    .map((e) => `<tr><td>&plusmn;(${e.offset[0]}, ${e.offset[1]})</td><td>${e.weight.toFixed(4)}</td><td>${e.coefficient.toFixed(4)}</td></tr>`)
    .join("");
  $("entries").innerHTML =
    `<tr><th>offset</th><th>weight</th><th>coefficient</th></tr>` +
    `<tr><td>(0, 0)</td><td></td><td>${report.center.toFixed(4)}</td></tr>` + rows;
  $("summary").textContent =
    `radius ${report.radius.toFixed(3)}, ${report.cardinality} neighbours, ` +
    `residual ${report.residual.toExponential(1)}, symbol max ${report.symbol_max.toFixed(3)}`;
  drawOffsets(report);
  updateSymbols(p);
}

function paint(canvas, values, lo, hi) {
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(canvas.width, canvas.height);
  const scale = hi > lo ? 255 / (hi - lo) : 0;
  for (let i = 0; i < values.length; i++) {
    // row 0 of the data is the bottom of the picture
    const x = i % canvas.width;
    const y = canvas.height - 1 - Math.floor(i / canvas.width);
    const v = Math.max(0, Math.min(255, (values[i] - lo) * scale));
    const j = 4 * (y * canvas.width + x);
    img.data[j] = img.data[j + 1] = img.data[j + 2] = v;
    img.data[j + 3] = 255;
  }
  ctx.putImageData(img, 0, 0);
}

function updateSymbols(p) {
  const grids = ["adlbr", "ann"].map((s) => symbolGrid(p.kappa, p.theta, s, SYMBOL_RES));
  const hi = Math.max(...grids.map((g) => g.reduce((a, b) => Math.max(a, b), 0)));
  paint($("symbol-adlbr"), grids[0], 0, hi);
  paint($("symbol-ann"), grids[1], 0, hi);
}

function runRestore() {
  const { kappa } = params();
  const lambda = Math.pow(10, Number($("lambda").value));
  $("lambda-out").textContent = lambda.toExponential(1);
  const noisy = noisyStripes(SIDE, kappa, Number($("noise").value), 7);
  paint($("noisy"), noisy, 0, 1);
  const t0 = performance.now();
  const r = restore(noisy, SIDE, kappa, lambda, $("r-scheme").value, $("r-tensor").value);
  const ms = performance.now() - t0;
  paint($("restored"), r.pixels(), 0, 1);
  $("restored-caption").textContent =
    `restored: ${r.iterations} CG iterations, ${ms.toFixed(0)} ms, L2 error ${r.error.toExponential(2)}`;
  r.free();
}

function guarded(f) {
  return () => {
    try {
      $("status").textContent = "";
      f();
    } catch (e) {
      $("status").textContent = String(e);
    }
  };
}

await init();
for (const id of ["kappa", "theta", "scheme"]) $(id).addEventListener("input", guarded(updateStencil));
$("lambda").addEventListener("input", () => {
  $("lambda-out").textContent = Math.pow(10, Number($("lambda").value)).toExponential(1);
});
$("run").addEventListener("click", guarded(runRestore));
guarded(updateStencil)();
guarded(runRestore)();
