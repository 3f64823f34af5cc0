import init, { waveSlice, coverDemo, extractionTrace } from "./pkg/conewave_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function busy(el, f) {
  el.textContent = "working...";
  setTimeout(() => {
    const start = performance.now();
    try {
      f();
    } catch (e) {
      el.textContent = String(e);
    }
    const ms = Math.round(performance.now() - start);
    if (!el.textContent.startsWith("Error")) el.textContent += ` (${ms} ms)`;
  }, 10);
}

function drawSlice() {
  const info = $("w-info");
  busy(info, () => {
    const rgba = waveSlice($("w-kind").value, num("w-k"), num("w-t"), num("w-seed"));
    const side = Math.round(Math.sqrt(rgba.length / 4));
    const canvas = $("w-canvas");
    canvas.width = canvas.height = side;
    canvas.style.width = canvas.style.height = "384px";
    canvas.getContext("2d").putImageData(new ImageData(new Uint8ClampedArray(rgba), side, side), 0, 0);
    info.textContent = `|phi(t)| at t = ${num("w-t")}, ${side} x ${side}, tube outline in cyan`;
  });
}

// Tubes are drawn as their t = t0 cross-sections plus a short axis segment.
function drawTube(ctx, tube, scale, box, style) {
  const r = tube.radius * tube.lambda * scale;
  const h = 4 * tube.lambda;
  for (const dx of [-box, 0, box]) {
    for (const dy of [-box, 0, box]) {
      const cx = (tube.x0[1] + dy) * scale;
      const cy = (tube.x0[0] + dx) * scale;
      ctx.strokeStyle = style;
      ctx.beginPath();
      ctx.arc(cx, cy, Math.max(r, 1), 0, 2 * Math.PI);
      ctx.moveTo(cx - tube.omega[1] * h * scale, cy - tube.omega[0] * h * scale);
      ctx.lineTo(cx + tube.omega[1] * h * scale, cy + tube.omega[0] * h * scale);
      ctx.stroke();
    }
  }
}

function runCover() {
  const info = $("c-info");
  busy(info, () => {
    const res = JSON.parse(coverDemo(num("c-k"), num("c-n"), num("c-d"), num("c-seed")));
    const canvas = $("c-canvas");
    const ctx = canvas.getContext("2d");
    const scale = canvas.width / res.box;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const wmax = Math.max(...res.weights, 1e-12);
    res.family.forEach((t, i) => drawTube(ctx, t, scale, res.box, `rgba(200,40,40,${0.2 + 0.8 * res.weights[i] / wmax})`));
    res.cover.forEach((t) => drawTube(ctx, t, scale, res.box, "rgba(20,120,220,0.5)"));
    for (const c of res.classes) {
      ctx.fillStyle = "black";
      ctx.fillRect(c.x[1] * scale - 3, c.x[0] * scale - 3, 6, 6);
    }
    info.textContent = `${res.family.length} input tubes (red), ${res.classes.length} classes (black), ` +
      `${res.cover.length} cover tubes (blue); residual ${res.residual.toFixed(4)} vs delta ${res.delta}`;
  });
}

function runExtract() {
  const info = $("e-info");
  busy(info, () => {
    const res = JSON.parse(extractionTrace(num("e-k"), num("e-d"), num("e-w")));
    const rows = res.steps.map((s, i) => {
      const deg = (Math.atan2(s.tube.omega[1], s.tube.omega[0]) * 180 / Math.PI).toFixed(1);
      return `<tr><td>${i}</td><td>${s.tube.x0.map((v) => v.toFixed(1)).join(", ")}</td><td>${deg}</td>` +
        `<td>${s.value.toFixed(4)}</td><td>${s.mu.toFixed(4)}</td><td>${s.mass_after.toFixed(4)}</td></tr>`;
    });
    $("e-table").innerHTML =
      "<tr><th>step</th><th>x0</th><th>angle (deg)</th><th>tube norm</th><th>mu</th><th>mass after</th></tr>" + rows.join("");
    info.textContent = `mass ${res.mass.toFixed(4)} -> ${res.remainder_mass.toFixed(4)}; remainder concentration ` +
      `${res.remainder_concentration.toFixed(4)} vs threshold ${res.threshold.toFixed(4)}${res.partial ? " (stopped at cap)" : ""}`;
  });
}

await init();
$("w-t").addEventListener("input", () => { $("w-tv").textContent = $("w-t").value; });
$("w-t").addEventListener("change", drawSlice);
$("w-go").addEventListener("click", drawSlice);
$("c-go").addEventListener("click", runCover);
$("e-go").addEventListener("click", runExtract);
drawSlice();
