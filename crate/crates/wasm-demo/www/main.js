import init, { Scene } from "./pkg/evdi_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const LOSS_LO = 0.05, LOSS_HI = 0.6, LOSS_N = 23;
let scene = null;
let curve = [];
let playing = null;

function paint(id, rgba) {
  const c = $(id);
  c.width = scene.width();
  c.height = scene.height();
  const img = new ImageData(new Uint8ClampedArray(rgba), c.width, c.height);
  c.getContext("2d").putImageData(img, 0, 0);
}

const theta = () => parseFloat($("theta").value);

function drawDeblur() {
  const t = theta();
  $("theta-out").textContent = t.toFixed(3);
  paint("deblur", scene.deblur_rgba(t));
  const [pb, pd] = scene.psnr_pair(t);
  $("psnr-blur").textContent = `${pb.toFixed(2)} dB`;
  $("psnr-deblur").textContent = `${pd.toFixed(2)} dB`;
  drawLatent();
  drawLoss();
}

function drawLatent() {
  const s = parseFloat($("scrub").value);
  $("scrub-out").textContent = s.toFixed(2);
  paint("latent", scene.latent_rgba(theta(), s));
}

function drawLoss() {
  const c = $("loss"), g = c.getContext("2d");
  const pad = 30, w = c.width - 2 * pad, h = c.height - 2 * pad;
  g.clearRect(0, 0, c.width, c.height);
  if (!curve.length) return;
  const logs = curve.map((v) => Math.log10(Math.max(v, 1e-12)));
  const lo = Math.min(...logs), hi = Math.max(...logs);
  const x = (t) => pad + ((t - LOSS_LO) / (LOSS_HI - LOSS_LO)) * w;
  const y = (v) => pad + h - ((v - lo) / (hi - lo || 1)) * h;
  g.strokeStyle = "#999";
  g.strokeRect(pad, pad, w, h);
  g.fillStyle = "#555";
  g.font = "11px monospace";
  g.fillText(`log10 loss ${hi.toFixed(1)}`, pad + 4, pad + 12);
  g.fillText(lo.toFixed(1), pad + 4, pad + h - 4);
  g.fillText(LOSS_LO.toString(), pad, pad + h + 14);
  g.fillText(LOSS_HI.toString(), pad + w - 20, pad + h + 14);
  g.strokeStyle = "#1f5fa8";
  g.beginPath();
  logs.forEach((v, k) => {
    const t = LOSS_LO + ((LOSS_HI - LOSS_LO) * k) / (LOSS_N - 1);
    k ? g.lineTo(x(t), y(v)) : g.moveTo(x(t), y(v));
  });
  g.stroke();
  g.strokeStyle = "#c0392b";
  g.beginPath();
  g.moveTo(x(theta()), pad);
  g.lineTo(x(theta()), pad + h);
  g.stroke();
}

function rebuild() {
  const t = parseFloat($("true-theta").value), v = parseFloat($("speed").value);
  $("status").textContent = "simulating...";
  // let the status paint before the synchronous work
  setTimeout(() => {
    const t0 = performance.now();
    scene?.free();
    scene = new Scene(t, v);
    curve = Array.from(scene.loss_curve(LOSS_LO, LOSS_HI, LOSS_N));
    paint("blur", scene.blur_rgba());
    paint("sharp", scene.sharp_rgba());
    $("fit-out").textContent = "";
    drawDeblur();
    $("status").textContent = `ready in ${(performance.now() - t0).toFixed(0)} ms`;
  }, 10);
}

function togglePlay() {
  if (playing) {
    clearInterval(playing);
    playing = null;
    $("play").textContent = "play";
    return;
  }
  $("play").textContent = "stop";
  playing = setInterval(() => {
    const s = $("scrub");
    s.value = ((parseFloat(s.value) + 0.02) % 1.0).toFixed(2);
    drawLatent();
  }, 50);
}

await init();
$("true-theta").addEventListener("input", (e) => ($("true-theta-out").textContent = parseFloat(e.target.value).toFixed(2)));
$("speed").addEventListener("input", (e) => ($("speed-out").textContent = e.target.value));
$("rebuild").addEventListener("click", rebuild);
$("theta").addEventListener("input", drawDeblur);
$("scrub").addEventListener("input", drawLatent);
$("play").addEventListener("click", togglePlay);
$("fit").addEventListener("click", () => {
  const t = scene.fit_theta();
  $("fit-out").textContent = `theta_hat = ${t.toFixed(4)}`;
  $("theta").value = t;
  drawDeblur();
});
rebuild();
