import init, { choi_spectrum, detect, certify_random_block } from "./pkg/posmap_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function show(out, f) {
  try {
    const r = JSON.parse(f());
    out.classList.remove("err");
    out.textContent = JSON.stringify(r, null, 2);
    return r;
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e);
    return null;
  }
}

function bars(eigs) {
  const top = Math.max(...eigs.map(Math.abs)) || 1;
  $("sp-bars").innerHTML = eigs
    .map((v) => `<div><span class="bar${v < 0 ? " neg" : ""}" style="width:${(20 * Math.abs(v)) / top}rem"></span> ${v.toExponential(3)}</div>`)
    .join("");
}

await init();

$("sp-run").onclick = () => {
  const r = show($("sp-out"), () =>
    choi_spectrum($("sp-family").value, num("sp-n"), num("sp-k"), num("sp-re"), num("sp-im")));
  if (r) {
    bars(r.eigenvalues);
    $("sp-out").textContent = `d = ${r.d}, min eigenvalue = ${r.min_eigenvalue}, negative eigenvalues: ${r.negative_count}`;
  } else {
    $("sp-bars").innerHTML = "";
  }
};
$("dt-run").onclick = () => show($("dt-out"), () => detect(num("dt-n"), num("dt-k"), num("dt-re"), num("dt-im")));
$("bc-run").onclick = () => show($("bc-out"), () => certify_random_block(num("bc-n"), num("bc-k"), num("bc-seed")));
