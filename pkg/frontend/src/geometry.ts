// Canvas <-> image coordinate mapping.
//
// The image is letterboxed into the canvas (uniform scale, centered);
// submissions use integer pixel corners in image space, so a box drawn on
// the canvas survives the round trip within one pixel.

export interface Viewport {
  scale: number;
  offsetX: number;
  offsetY: number;
  imageWidth: number;
  imageHeight: number;
}

export function fitViewport(
  imageWidth: number,
  imageHeight: number,
  canvasWidth: number,
  canvasHeight: number,
): Viewport {
  const scale = Math.min(canvasWidth / imageWidth, canvasHeight / imageHeight);
  return {
    scale,
    offsetX: (canvasWidth - imageWidth * scale) / 2,
    offsetY: (canvasHeight - imageHeight * scale) / 2,
    imageWidth,
    imageHeight,
  };
}

export function imageToCanvas(
  view: Viewport,
  x: number,
  y: number,
): [number, number] {
  return [view.offsetX + x * view.scale, view.offsetY + y * view.scale];
}

export function canvasToImage(
  view: Viewport,
  x: number,
  y: number,
): [number, number] {
  const ix = (x - view.offsetX) / view.scale;
  const iy = (y - view.offsetY) / view.scale;
  return [
    Math.min(Math.max(ix, 0), view.imageWidth),
    Math.min(Math.max(iy, 0), view.imageHeight),
  ];
}

export interface Corners {
  xmin: number;
  ymin: number;
  xmax: number;
  ymax: number;
}

/** Order a dragged rectangle's corners and round to integer pixels. */
export function normalizeCorners(
  x1: number,
  y1: number,
  x2: number,
  y2: number,
): Corners {
  return {
    xmin: Math.round(Math.min(x1, x2)),
    ymin: Math.round(Math.min(y1, y2)),
    xmax: Math.round(Math.max(x1, x2)),
    ymax: Math.round(Math.max(y1, y2)),
  };
}

export function boxArea(box: Corners): number {
  return Math.max(0, box.xmax - box.xmin) * Math.max(0, box.ymax - box.ymin);
}

export function containsPoint(box: Corners, x: number, y: number): boolean {
  return x >= box.xmin && x <= box.xmax && y >= box.ymin && y <= box.ymax;
}

/** Clamp integer corners into the image and drop degenerate boxes. */
export function clampToImage(
  box: Corners,
  imageWidth: number,
  imageHeight: number,
): Corners | null {
  const clamped = {
    xmin: Math.min(Math.max(box.xmin, 0), imageWidth),
    ymin: Math.min(Math.max(box.ymin, 0), imageHeight),
    xmax: Math.min(Math.max(box.xmax, 0), imageWidth),
    ymax: Math.min(Math.max(box.ymax, 0), imageHeight),
  };
  if (clamped.xmax - clamped.xmin < 1 || clamped.ymax - clamped.ymin < 1) {
    return null;
  }
  return clamped;
}
