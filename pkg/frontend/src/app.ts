// DOM wiring for the annotation UI.
//
// Layout: session bar on top, image canvas in the middle with a film strip
// of the batch below, class palette + actions on the right, progress panel
// (learning curve + class table) at the bottom.

import { ApiClient, ApiRequestError } from "./api.js";
import { curveLayout } from "./chart.js";
import {
  canvasToImage,
  fitViewport,
  imageToCanvas,
  normalizeCorners,
  containsPoint,
  type Viewport,
} from "./geometry.js";
import { buildPalette, classColor } from "./palette.js";
import { BatchWorkflow } from "./workflow.js";
import type { PendingBatch, Progress } from "./types.js";

const api = new ApiClient("");

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

let sessionId: string | null = null;
let classes: string[] = [];
let workflow: BatchWorkflow | null = null;
let selectedClass = "";
let selectedBox = -1;
let viewport: Viewport | null = null;
let drag: { x: number; y: number; moveBox?: number } | null = null;
let imageCache = new Map<string, HTMLImageElement | null>();
let pollTimer: number | undefined;

function setStatus(text: string, isError = false) {
  const el = $("status");
  el.textContent = text;
  el.className = isError ? "error" : "";
}

async function startSession() {
  try {
    const info = await api.createSession({});
    sessionId = info.session_id;
    classes = info.classes;
    selectedClass = classes[0] ?? "";
    setStatus(
      `session ${info.session_id} | method ${info.method} | ` +
        `${info.batches} batches of ${info.batch_size}`,
    );
    imageCache.clear();
    await loadBatch();
    schedulePoll();
  } catch (error) {
    setStatus(`could not start session: ${describe(error)}`, true);
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiRequestError) {
    return `${error.code}: ${error.message}`;
  }
  return String(error);
}

async function loadBatch() {
  if (!sessionId) return;
  try {
    const batch = await api.getBatch(sessionId);
    workflow = new BatchWorkflow(batch);
    selectedBox = -1;
    renderStrip();
    renderImage();
    renderBatchInfo(batch);
    updateSubmitGate();
  } catch (error) {
    if (error instanceof ApiRequestError && error.status === 409) {
      workflow = null;
      renderStrip();
      renderBatchInfo(null);
      setStatus("pool exhausted: no batches left to label");
      const canvas = $("canvas") as unknown as HTMLCanvasElement;
      canvas.getContext("2d")?.clearRect(0, 0, canvas.width, canvas.height);
    } else {
      setStatus(describe(error), true);
    }
  }
}

function renderBatchInfo(batch: PendingBatch | null) {
  $("batch-info").textContent = batch
    ? `step ${batch.step} | batch #${batch.batch_id} | ` +
      `value ${batch.batch_value.toFixed(3)} (${batch.method})`
    : "";
}

function renderStrip() {
  const strip = $("strip");
  strip.innerHTML = "";
  if (!workflow) return;
  workflow.images.forEach((image, index) => {
    const cell = document.createElement("button");
    cell.className = "strip-cell";
    if (index === workflow!.index) cell.classList.add("current");
    if (image.visited && (image.boxes.length || image.noObjects)) {
      cell.classList.add("done");
    }
    if (image.error) cell.classList.add("problem");
    cell.textContent = `${index + 1}`;
    cell.title = image.error
      ? `${image.imageId}: ${image.error}`
      : image.imageId;
    cell.onclick = () => {
      workflow!.goTo(index);
      selectedBox = -1;
      renderStrip();
      renderImage();
      updateSubmitGate();
    };
    strip.appendChild(cell);
  });
}

function loadImage(imageId: string): HTMLImageElement | null {
  if (imageCache.has(imageId)) return imageCache.get(imageId)!;
  imageCache.set(imageId, null);
  const img = new Image();
  img.onload = () => {
    imageCache.set(imageId, img);
    renderImage();
  };
  img.onerror = () => imageCache.set(imageId, null);
  img.src = api.imageUrl(imageId);
  return null;
}

function renderImage() {
  const canvas = $("canvas") as unknown as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!workflow) return;
  const state = workflow.current;
  const batchImage = workflow.batch.images[workflow.index];
  viewport = fitViewport(state.width, state.height, canvas.width, canvas.height);

  const [left, top] = imageToCanvas(viewport, 0, 0);
  const [right, bottom] = imageToCanvas(viewport, state.width, state.height);
  const image = loadImage(state.imageId);
  if (image) {
    ctx.drawImage(image, left, top, right - left, bottom - top);
  } else {
    ctx.fillStyle = "#2a2d33";
    ctx.fillRect(left, top, right - left, bottom - top);
    ctx.fillStyle = "#555";
    ctx.font = "13px sans-serif";
    ctx.fillText(state.imageId, left + 8, top + 18);
  }
  ctx.strokeStyle = "#444";
  ctx.strokeRect(left, top, right - left, bottom - top);

  // pending suggestions: dashed, labeled with top-2 + margin
  batchImage.suggestions.forEach((suggestion, index) => {
    if (state.suggestionStatus[index] !== "pending") return;
    const [x1, y1, x2, y2] = suggestion.pixel_box;
    const [cx1, cy1] = imageToCanvas(viewport!, x1, y1);
    const [cx2, cy2] = imageToCanvas(viewport!, x2, y2);
    ctx.setLineDash([6, 4]);
    ctx.strokeStyle = suggestion.unknown ? "#999" : "#f0c040";
    ctx.lineWidth = 1.5;
    ctx.strokeRect(cx1, cy1, cx2 - cx1, cy2 - cy1);
    ctx.setLineDash([]);
    const [c1, c2] = suggestion.top_classes;
    ctx.fillStyle = "#f0c040";
    ctx.font = "11px sans-serif";
    ctx.fillText(
      `${index}: ${c1[0]} ${c1[1].toFixed(2)} / ${c2[0]} ${c2[1].toFixed(2)}` +
        ` m=${suggestion.margin.toFixed(2)}${suggestion.unknown ? " ?" : ""}`,
      cx1 + 2,
      Math.max(cy1 - 3, 10),
    );
  });

  // committed boxes: solid, class-colored
  state.boxes.forEach((box, index) => {
    const [cx1, cy1] = imageToCanvas(viewport!, box.xmin, box.ymin);
    const [cx2, cy2] = imageToCanvas(viewport!, box.xmax, box.ymax);
    ctx.strokeStyle = classColor(box.className, classes);
    ctx.lineWidth = index === selectedBox ? 3 : 2;
    ctx.strokeRect(cx1, cy1, cx2 - cx1, cy2 - cy1);
    ctx.fillStyle = ctx.strokeStyle;
    ctx.font = "12px sans-serif";
    ctx.fillText(box.className, cx1 + 2, cy2 - 4);
  });

  renderSuggestionList(batchImage, state);
  $("image-title").textContent =
    `${state.imageId} (${state.width}x${state.height})` +
    (state.noObjects ? " | no objects" : "") +
    (state.error ? ` | ${state.error}` : "");
}

function renderSuggestionList(
  batchImage: PendingBatch["images"][number],
  state: BatchWorkflow["images"][number],
) {
  const list = $("suggestions");
  list.innerHTML = "";
  batchImage.suggestions.forEach((suggestion, index) => {
    const row = document.createElement("div");
    row.className = `suggestion ${state.suggestionStatus[index]}`;
    const label = document.createElement("span");
    const [c1] = suggestion.top_classes;
    label.textContent =
      `#${index} ${c1[0]} conf=${suggestion.confidence.toFixed(2)} ` +
      `margin=${suggestion.margin.toFixed(2)}`;
    row.appendChild(label);
    if (state.suggestionStatus[index] === "pending") {
      const accept = document.createElement("button");
      accept.textContent = "accept";
      accept.onclick = () => {
        workflow!.acceptSuggestion(state.imageId, index);
        refresh();
      };
      const reject = document.createElement("button");
      reject.textContent = "reject";
      reject.onclick = () => {
        workflow!.rejectSuggestion(state.imageId, index);
        refresh();
      };
      row.append(accept, reject);
    }
    list.appendChild(row);
  });
}

function renderPalette(progress: Progress | null) {
  const paletteEl = $("palette");
  paletteEl.innerHTML = "";
  const weights = progress?.class_weights ?? {};
  const counts = progress?.class_counts ?? {};
  const entries = progress
    ? buildPalette(weights, counts, classes)
    : classes.map((className) => ({
        className,
        weight: 0,
        count: 0,
        color: classColor(className, classes),
      }));
  for (const entry of entries) {
    const button = document.createElement("button");
    button.className = "palette-entry";
    if (entry.className === selectedClass) button.classList.add("selected");
    button.style.borderColor = entry.color;
    button.textContent = progress
      ? `${entry.className} (w=${entry.weight.toFixed(1)})`
      : entry.className;
    button.onclick = () => {
      selectedClass = entry.className;
      renderPalette(progress);
    };
    paletteEl.appendChild(button);
  }
}

function updateSubmitGate() {
  const button = $("submit") as unknown as HTMLButtonElement;
  if (!workflow) {
    button.disabled = true;
    return;
  }
  button.disabled = !workflow.canSubmit();
  const blocking = workflow.blockingImages();
  $("gate-info").textContent = blocking.length
    ? `${blocking.length} image(s) need boxes or a "no objects" mark`
    : "ready to submit";
}

function refresh() {
  renderStrip();
  renderImage();
  updateSubmitGate();
}

async function submitBatch() {
  if (!workflow || !sessionId) return;
  try {
    const ack = await api.submitLabels(sessionId, workflow.buildSubmission());
    setStatus(`labeled ${ack.labeled} images | step ${ack.step} | ${ack.status}`);
    await Promise.all([loadBatch(), pollProgress()]);
  } catch (error) {
    if (error instanceof ApiRequestError && error.status === 422) {
      workflow.applyServerError(error.body);
      refresh();
      setStatus(`rejected: ${error.message}`, true);
    } else {
      setStatus(describe(error), true);
    }
  }
}

async function pollProgress() {
  if (!sessionId) return;
  try {
    const progress = await api.getProgress(sessionId);
    renderPalette(progress);
    renderProgress(progress);
  } catch {
    // progress is advisory; keep the annotation surface alive
  }
}

function schedulePoll() {
  if (pollTimer !== undefined) clearInterval(pollTimer);
  pollTimer = window.setInterval(pollProgress, 4000);
  void pollProgress();
}

function renderProgress(progress: Progress) {
  const canvas = $("chart") as unknown as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const layout = curveLayout(progress.curve, canvas.width, canvas.height);
  ctx.strokeStyle = "#666";
  ctx.strokeRect(0.5, 0.5, canvas.width - 1, canvas.height - 1);
  ctx.fillStyle = "#888";
  ctx.font = "10px sans-serif";
  for (const tick of layout.yTicks) {
    ctx.fillText(tick.label, 2, tick.y + 3);
  }
  for (const tick of layout.xTicks) {
    ctx.fillText(tick.label, tick.x - 6, canvas.height - 4);
  }
  ctx.strokeStyle = "#4fc3f7";
  ctx.lineWidth = 2;
  ctx.beginPath();
  layout.polyline.forEach(([x, y], index) => {
    if (index === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
  ctx.fillStyle = "#4fc3f7";
  for (const [x, y] of layout.polyline) {
    ctx.fillRect(x - 2, y - 2, 4, 4);
  }

  const table = $("class-table");
  table.innerHTML =
    "<tr><th>class</th><th>count</th><th>weight</th><th>AP</th></tr>";
  const latest = progress.curve[progress.curve.length - 1];
  for (const entry of buildPalette(
    progress.class_weights,
    progress.class_counts,
    classes,
  )) {
    const row = document.createElement("tr");
    const ap = latest?.per_class_ap[entry.className];
    row.innerHTML =
      `<td style="color:${entry.color}">${entry.className}</td>` +
      `<td>${entry.count}</td><td>${entry.weight.toFixed(2)}</td>` +
      `<td>${ap === undefined ? "-" : ap.toFixed(3)}</td>`;
    table.appendChild(row);
  }
  $("progress-info").textContent =
    `step ${progress.step} | ${progress.samples_labeled} samples labeled | ` +
    `${progress.batches_remaining} batches left | ${progress.status}`;
}

function wireCanvas() {
  const canvas = $("canvas") as unknown as HTMLCanvasElement;
  canvas.addEventListener("mousedown", (event) => {
    if (!workflow || !viewport) return;
    const rect = canvas.getBoundingClientRect();
    const [ix, iy] = canvasToImage(
      viewport,
      event.clientX - rect.left,
      event.clientY - rect.top,
    );
    const state = workflow.current;
    const hit = state.boxes.findIndex((box) => containsPoint(box, ix, iy));
    if (event.shiftKey && hit >= 0) {
      selectedBox = hit;
      drag = { x: ix, y: iy, moveBox: hit };
    } else {
      selectedBox = hit;
      drag = { x: ix, y: iy };
    }
    renderImage();
  });
  canvas.addEventListener("mousemove", (event) => {
    if (!workflow || !viewport || !drag || drag.moveBox === undefined) return;
    const rect = canvas.getBoundingClientRect();
    const [ix, iy] = canvasToImage(
      viewport,
      event.clientX - rect.left,
      event.clientY - rect.top,
    );
    workflow.moveBox(workflow.current.imageId, drag.moveBox, ix - drag.x, iy - drag.y);
    drag.x = ix;
    drag.y = iy;
    renderImage();
  });
  canvas.addEventListener("mouseup", (event) => {
    if (!workflow || !viewport || !drag) return;
    const rect = canvas.getBoundingClientRect();
    const [ix, iy] = canvasToImage(
      viewport,
      event.clientX - rect.left,
      event.clientY - rect.top,
    );
    if (drag.moveBox === undefined) {
      const corners = normalizeCorners(drag.x, drag.y, ix, iy);
      if (corners.xmax - corners.xmin >= 4 && corners.ymax - corners.ymin >= 4) {
        workflow.addBox(workflow.current.imageId, corners, selectedClass);
      }
    }
    drag = null;
    refresh();
  });
}

function wireControls() {
  $("start").onclick = () => void startSession();
  $("submit").onclick = () => void submitBatch();
  $("prev").onclick = () => {
    workflow?.prev();
    selectedBox = -1;
    refresh();
  };
  $("next").onclick = () => {
    workflow?.next();
    selectedBox = -1;
    refresh();
  };
  $("no-objects").onclick = () => {
    if (workflow) {
      workflow.markNoObjects(workflow.current.imageId);
      refresh();
    }
  };
  $("accept-all").onclick = () => {
    if (workflow) {
      workflow.acceptAllSuggestions(workflow.current.imageId);
      refresh();
    }
  };
  $("delete-box").onclick = () => {
    if (workflow && selectedBox >= 0) {
      workflow.removeBox(workflow.current.imageId, selectedBox);
      selectedBox = -1;
      refresh();
    }
  };
}

window.addEventListener("load", () => {
  wireControls();
  wireCanvas();
  renderPalette(null);
  setStatus("no session; press Start");
});
