import init, { critical_curve, simulate, predict_intervention } from "./pkg/tmperc_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function template() {
  switch ($("template").value) {
    case "ring10": return { kind: "ring", k: 10, reach: 1 };
    case "ring20": return { kind: "ring", k: 20, reach: 1 };
    case "cube3": return { kind: "cube3" };
    default: return { kind: "single" };
  }
}

function model() {
  const mix = num("mix");
  const single = $("template").value === "single";
  return {
    template: template(),
    n: num("n"),
    near_degree: num("near"),
    far_degree: single ? 0 : num("far"),
    zeta: [0, 1 - mix, mix],
    horizon: $("horizon").value,
  };
}

// Line plot of one or more series; `hline` draws a horizontal reference.
function plot(canvas, series, hline) {
  const ctx = canvas.getContext("2d");
  const { width, height } = canvas;
  const pad = 30;
  ctx.clearRect(0, 0, width, height);
  const all = series.flatMap((s) => s.values).concat(hline === undefined ? [] : [hline]);
  const lo = Math.min(...all);
  const hi = Math.max(...all);
  const len = Math.max(...series.map((s) => s.values.length));
  const x = (i) => pad + (i / Math.max(len - 1, 1)) * (width - 2 * pad);
  const y = (v) => height - pad - ((v - lo) / (hi - lo || 1)) * (height - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, width - 2 * pad, height - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.fillText(hi.toPrecision(3), 2, pad);
  ctx.fillText(lo.toPrecision(3), 2, height - pad);
  if (hline !== undefined) {
    ctx.strokeStyle = "#bbb";
    ctx.beginPath();
    ctx.moveTo(pad, y(hline));
    ctx.lineTo(width - pad, y(hline));
    ctx.stroke();
  }
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.values.forEach((v, i) => (i ? ctx.lineTo(x(i), y(v)) : ctx.moveTo(x(i), y(v))));
    ctx.stroke();
  }
}

function guard(out, f) {
  try {
    out.classList.remove("error");
    f();
  } catch (e) {
    out.classList.add("error");
    out.textContent = String(e);
  }
}

function runCurve() {
  const out = $("curve-out");
  guard(out, () => {
    const r = JSON.parse(critical_curve(JSON.stringify(model())));
    plot($("curve-plot"), [{ values: r.f_curve, color: "#1f77b4" }], 0);
    const failed = Object.entries(r.assumptions).filter(([k, v]) => k.endsWith("_ok") && !v).map(([k]) => k);
    out.textContent =
      `Φ = ${r.phi}, t* = ${r.t_star}, horizon ${r.t_max}, min f = ${r.f_min.toFixed(2)}\n` +
      `p = ${r.p.toExponential(3)}, q = ${r.q.toExponential(3)}, β = ${r.assumptions.beta.toFixed(3)}\n` +
      `failed assumptions: ${failed.length ? failed.join(", ") : "none"}` +
      (r.assumptions.horizon_capped ? " (horizon capped at n/k)" : "");
    $("sim-seeds").value = Math.round(1.1 * r.phi);
  });
}

function runSimulate() {
  const out = $("sim-out");
  guard(out, () => {
    const input = { ...model(), seeds: num("sim-seeds"), seed: num("seed") };
    const r = JSON.parse(simulate(JSON.stringify(input)));
    plot($("sim-plot"), [{ values: r.totals, color: "#d62728" }], 0.9 * input.n);
    out.textContent = `${r.outcome} after ${r.totals.length - 1} generations, final fraction ${r.final_fraction.toFixed(4)}`;
  });
}

function runIntervention() {
  const out = $("int-out");
  guard(out, () => {
    const input = {
      ...model(),
      seeds: num("int-seeds"),
      seed: num("seed"),
      strategy: $("strategy").value,
      alpha: num("alpha"),
      q_ratio: num("q-ratio"),
      lambda: num("lambda"),
    };
    const r = JSON.parse(predict_intervention(JSON.stringify(input)));
    plot($("int-plot"), [{ values: r.totals, color: "#2ca02c" }], input.lambda * input.n);
    if (!r.triggered) {
      out.textContent = `never reached λn: ${r.outcome}, final fraction ${r.final_fraction.toFixed(4)}`;
      return;
    }
    out.textContent =
      `intervened at τ = ${r.tau} with ${r.infected_tau} infected\n` +
      `φ_J = ${r.phi_j.toFixed(1)}, Φ_J = ${r.critical_j}, band [${r.lower.toFixed(1)}, ${r.upper.toFixed(1)}]\n` +
      `predicted ${r.prediction}, observed ${r.outcome} (final fraction ${r.final_fraction.toFixed(4)})`;
  });
}

await init();
$("curve-run").addEventListener("click", runCurve);
$("sim-run").addEventListener("click", runSimulate);
$("int-run").addEventListener("click", runIntervention);
runCurve();
