import init, { Simulation, mms_rates, default_config } from "./pkg/diffuse_fsi_web.js";

const $ = (id) => document.getElementById(id);
const RES = 64;
let sim = null;
let running = false;
let trace = [];

function colormap(value, lo, hi) {
  const s = Math.min(1, Math.max(0, (value - lo) / (hi - lo)));
  // blue (solid) through white to red (fluid)
  const r = s < 0.5 ? 2 * s : 1;
  const b = s < 0.5 ? 1 : 2 * (1 - s);
  const g = 1 - Math.abs(2 * s - 1);
  return [255 * r, 255 * (0.55 * g + 0.45 * Math.min(r, b)), 255 * b];
}

function drawField() {
  const ctx = $("field").getContext("2d");
  const speed = $("view").value === "speed";
  const data = speed ? sim.speed_image(RES) : sim.phi_image(RES);
  let lo = -1, hi = 1;
  if (speed) { lo = 0; hi = Math.max(1e-12, ...data); }
  const img = ctx.createImageData(RES, RES);
  data.forEach((v, i) => {
    const [r, g, b] = colormap(v, lo, hi);
    img.data.set([r, g, b, 255], 4 * i);
  });
  const off = new OffscreenCanvas(RES, RES);
  off.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, ctx.canvas.width, ctx.canvas.height);
}

function drawTrace() {
  const c = $("trace"), ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  if (trace.length < 2) return;
  const tmax = trace[trace.length - 1].t || 1;
  const series = [
    { key: "center_of_mass_y", color: "#1f5fbf", label: "center of mass y" },
    { key: "min_phi", color: "#b03030", label: "min φ" },
  ];
  ctx.font = "11px sans-serif";
  series.forEach((s, k) => {
    const ys = trace.map((r) => r[s.key]).filter(Number.isFinite);
    const lo = Math.min(...ys), hi = Math.max(...ys);
    const span = hi - lo || 1;
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    trace.forEach((r, i) => {
      const x = 30 + (r.t / tmax) * (c.width - 40);
      const y = c.height - 20 - ((r[s.key] - lo) / span) * (c.height - 40);
      i ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
    });
    ctx.stroke();
    ctx.fillStyle = s.color;
    ctx.fillText(`${s.label}: ${lo.toFixed(4)} .. ${hi.toFixed(4)}`, 30, 14 + 13 * k);
  });
  ctx.fillStyle = "#444";
  ctx.fillText(`t = ${tmax.toFixed(4)}`, c.width - 80, c.height - 5);
}

function buildConfig() {
  const base = JSON.parse(default_config($("case").value));
  const extra = JSON.parse($("extra").value || "{}");
  const steps = Number($("nsteps").value);
  const dt = Number($("dt").value);
  Object.assign(base, extra, {
    mesh: { ...base.mesh, ...(extra.mesh || {}), n_per_side: Number($("n").value) },
    dt,
    final_time: steps * dt,
  });
  return JSON.stringify(base);
}

function loop() {
  if (!running) return;
  try {
    if (sim.step >= sim.steps) { stop("finished"); return; }
    const rec = JSON.parse(sim.advance());
    trace.push(rec);
    $("status").textContent =
      `step ${rec.step}/${sim.steps}, t = ${rec.t.toFixed(4)}, subiterations ${rec.subiterations}, ` +
      `min φ ${rec.min_phi.toFixed(3)}, mass drift ${(rec.mass_phi - trace[0].mass_phi).toExponential(1)}`;
    drawField();
    drawTrace();
    requestAnimationFrame(loop);
  } catch (e) {
    stop(String(e), true);
  }
}

function stop(msg, isError = false) {
  running = false;
  $("start").disabled = false;
  $("stop").disabled = true;
  $("status").textContent += ` (${msg})`;
  $("status").className = isError ? "err" : "";
}

$("start").onclick = () => {
  try {
    sim?.free();
    sim = new Simulation(buildConfig());
    trace = [JSON.parse(sim.last_record())];
    $("status").className = "";
    drawField();
    running = true;
    $("start").disabled = true;
    $("stop").disabled = false;
    requestAnimationFrame(loop);
  } catch (e) {
    $("status").textContent = String(e);
    $("status").className = "err";
  }
};
$("stop").onclick = () => stop("stopped");
$("view").onchange = () => sim && drawField();

$("rates").onclick = () => {
  $("rates-status").textContent = "running...";
  $("rates-out").innerHTML = "";
  // let the status paint before the blocking call
  setTimeout(() => {
    try {
      const out = JSON.parse(mms_rates(Number($("mms-case").value), Number($("lv0").value), Number($("lv1").value)));
      const fmt = (x) => (x == null ? "n/a" : x.toExponential(3));
      const f3 = (x) => (x == null ? "n/a" : x.toFixed(3));
      let html = "<table><tr><th>level</th><th>n</th><th>&Delta;t</th><th>e_v</th><th>e_B</th><th>e_&phi;</th><th>mass drift</th></tr>";
      out.rows.forEach((r) => {
        html += `<tr><td>${r.level}</td><td>${r.n_per_side}</td><td>${r.dt}</td><td>${fmt(r.e_v)}</td><td>${fmt(r.e_b)}</td><td>${fmt(r.e_phi)}</td><td>${fmt(r.max_mass_drift)}</td></tr>`;
      });
      html += "</table>";
      if (out.rates.length) {
        html += "<table><tr><th>levels</th><th>rate v</th><th>rate B</th><th>rate &phi;</th></tr>";
        out.rates.forEach((r) => {
          html += `<tr><td>${r.from}&rarr;${r.to}</td><td>${f3(r.v)}</td><td>${f3(r.b)}</td><td>${f3(r.phi)}</td></tr>`;
        });
        html += "</table>";
      }
      $("rates-out").innerHTML = html;
      $("rates-status").textContent = "";
    } catch (e) {
      $("rates-status").textContent = String(e);
      $("rates-status").className = "err";
    }
  }, 20);
};

await init();
$("status").textContent = "ready";
