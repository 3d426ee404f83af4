import init, { transmission_spectrum, switch_waveforms, blockade_radius_um } from "./pkg/rydswitch_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function plot(canvas, xs, series, xlabel) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 30;
  ctx.clearRect(0, 0, w, h);
  const ymax = Math.max(1e-12, ...series.flatMap((s) => s.ys));
  const x0 = xs[0], x1 = xs[xs.length - 1];
  const px = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (y) => h - pad - (y / ymax) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.fillText(`${x0.toFixed(0)}`, pad, h - 10);
  ctx.fillText(`${x1.toFixed(0)}`, w - pad - 20, h - 10);
  ctx.fillText(xlabel, w / 2 - 30, h - 10);
  ctx.fillText(ymax.toPrecision(3), 2, pad);
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.ys.forEach((y, i) => (i ? ctx.lineTo(px(xs[i]), py(y)) : ctx.moveTo(px(xs[i]), py(y))));
    ctx.stroke();
  }
}

function guarded(f) {
  return () => {
    try {
      $("error").textContent = "";
      f();
    } catch (e) {
      $("error").textContent = String(e.message ?? e);
    }
  };
}

const drawSpectrum = guarded(() => {
  const span = 30, points = 601;
  const ys = transmission_spectrum(num("oc"), num("gdr"), num("od"), span, points);
  const xs = Array.from(ys, (_, i) => -span + (2 * span * i) / (points - 1));
  plot($("spectrum"), xs, [{ ys: Array.from(ys), color: "#c33" }], "detuning (2π×MHz)");
});

const drawWaveform = guarded(() => {
  const wf = switch_waveforms(num("bw"), num("gate"), 1000);
  const eit = Array.from(wf.eit), gate = Array.from(wf.gate);
  const xs = eit.map((_, i) => wf.start_ns + i * wf.dt_ns);
  $("contrast").textContent = (100 * wf.contrast).toFixed(1) + " %";
  wf.free();
  plot($("waveform"), xs, [
    { ys: eit, color: "#c33" },
    { ys: gate, color: "#36c" },
  ], "time (ns)");
});

const drawRadius = guarded(() => {
  $("radius").textContent = blockade_radius_um(num("c6"), 0, num("boc")).toFixed(3) + " μm";
});

const bindings = [
  ["oc", drawSpectrum], ["gdr", drawSpectrum], ["od", drawSpectrum],
  ["bw", drawWaveform], ["gate", drawWaveform],
  ["c6", drawRadius], ["boc", drawRadius],
];

await init();
for (const [id, draw] of bindings) {
  const show = () => ($(`${id}-v`).textContent = $(id).value);
  $(id).addEventListener("input", () => { show(); draw(); });
  show();
}
drawSpectrum();
drawWaveform();
drawRadius();
