// Batch labeling state machine.
//
// One BatchWorkflow wraps one proposed batch: per-image boxes (drawn or
// accepted from suggestions), visited tracking, the submit gate, and the
// submission payload.  Rendered boxes and payload boxes are the same
// objects, so what the annotator sees is exactly what the service gets.

import { clampToImage, type Corners } from "./geometry.js";
import type {
  ApiErrorBody,
  LabelBox,
  LabelSubmission,
  PendingBatch,
} from "./types.js";

export interface EditableBox extends Corners {
  className: string;
  fromSuggestion: boolean;
}

export type SuggestionStatus = "pending" | "accepted" | "rejected";

export interface ImageLabelState {
  imageId: string;
  width: number;
  height: number;
  boxes: EditableBox[];
  suggestionStatus: SuggestionStatus[];
  visited: boolean;
  noObjects: boolean;
  error: string | null;
}

export class BatchWorkflow {
  readonly images: ImageLabelState[];
  private currentIndex = 0;

  constructor(readonly batch: PendingBatch) {
    this.images = batch.images.map((image) => ({
      imageId: image.image_id,
      width: image.width,
      height: image.height,
      boxes: [],
      suggestionStatus: image.suggestions.map(() => "pending" as const),
      visited: false,
      noObjects: false,
      error: null,
    }));
    if (this.images.length > 0) {
      this.images[0].visited = true;
    }
  }

  get current(): ImageLabelState {
    return this.images[this.currentIndex];
  }

  get index(): number {
    return this.currentIndex;
  }

  goTo(index: number): ImageLabelState {
    if (index < 0 || index >= this.images.length) {
      throw new RangeError(`image index ${index} out of range`);
    }
    this.currentIndex = index;
    this.images[index].visited = true;
    return this.images[index];
  }

  next(): ImageLabelState {
    return this.goTo(Math.min(this.currentIndex + 1, this.images.length - 1));
  }

  prev(): ImageLabelState {
    return this.goTo(Math.max(this.currentIndex - 1, 0));
  }

  private state(imageId: string): ImageLabelState {
    const state = this.images.find((i) => i.imageId === imageId);
    if (!state) {
      throw new Error(`image ${imageId} is not part of the pending batch`);
    }
    return state;
  }

  /** Accept one suggestion: its pixel box becomes an editable label box. */
  acceptSuggestion(imageId: string, index: number): EditableBox | null {
    const state = this.state(imageId);
    const suggestion = this.batch.images.find(
      (i) => i.image_id === imageId,
    )?.suggestions[index];
    if (!suggestion || state.suggestionStatus[index] !== "pending") {
      return null;
    }
    const [x1, y1, x2, y2] = suggestion.pixel_box;
    const clamped = clampToImage(
      {
        xmin: Math.round(x1),
        ymin: Math.round(y1),
        xmax: Math.round(x2),
        ymax: Math.round(y2),
      },
      state.width,
      state.height,
    );
    if (clamped === null) {
      state.suggestionStatus[index] = "rejected";
      return null;
    }
    const box: EditableBox = {
      ...clamped,
      className: suggestion.top_classes[0][0],
      fromSuggestion: true,
    };
    state.suggestionStatus[index] = "accepted";
    state.boxes.push(box);
    state.noObjects = false;
    return box;
  }

  acceptAllSuggestions(imageId: string): number {
    const state = this.state(imageId);
    let accepted = 0;
    state.suggestionStatus.forEach((status, index) => {
      if (status === "pending" && this.acceptSuggestion(imageId, index)) {
        accepted += 1;
      }
    });
    return accepted;
  }

  rejectSuggestion(imageId: string, index: number): void {
    const state = this.state(imageId);
    if (state.suggestionStatus[index] === "pending") {
      state.suggestionStatus[index] = "rejected";
    }
  }

  /** Add a hand-drawn box (image-space corners). */
  addBox(imageId: string, corners: Corners, className: string): EditableBox | null {
    const state = this.state(imageId);
    const clamped = clampToImage(corners, state.width, state.height);
    if (clamped === null || !className) {
      return null;
    }
    const box: EditableBox = { ...clamped, className, fromSuggestion: false };
    state.boxes.push(box);
    state.noObjects = false;
    return box;
  }

  removeBox(imageId: string, index: number): void {
    this.state(imageId).boxes.splice(index, 1);
  }

  moveBox(imageId: string, index: number, dx: number, dy: number): void {
    const state = this.state(imageId);
    const box = state.boxes[index];
    if (!box) return;
    const shifted = clampToImage(
      {
        xmin: box.xmin + Math.round(dx),
        ymin: box.ymin + Math.round(dy),
        xmax: box.xmax + Math.round(dx),
        ymax: box.ymax + Math.round(dy),
      },
      state.width,
      state.height,
    );
    if (shifted) {
      Object.assign(box, shifted);
    }
  }

  /** Explicitly mark an image as containing no objects. */
  markNoObjects(imageId: string): void {
    const state = this.state(imageId);
    state.boxes = [];
    state.noObjects = true;
    state.visited = true;
    state.suggestionStatus = state.suggestionStatus.map(() => "rejected");
  }

  /** Every image was looked at, and empties were confirmed empty. */
  canSubmit(): boolean {
    return this.images.every(
      (i) => i.visited && (i.boxes.length > 0 || i.noObjects),
    );
  }

  /** Images still blocking submission. */
  blockingImages(): string[] {
    return this.images
      .filter((i) => !(i.visited && (i.boxes.length > 0 || i.noObjects)))
      .map((i) => i.imageId);
  }

  buildSubmission(): LabelSubmission[] {
    return this.images.map((state) => ({
      image: state.imageId,
      boxes: state.boxes.map(
        (box): LabelBox => ({
          class_name: box.className,
          xmin: box.xmin,
          ymin: box.ymin,
          xmax: box.xmax,
          ymax: box.ymax,
        }),
      ),
    }));
  }

  /** Surface a 422 validation error on the offending images. */
  applyServerError(error: ApiErrorBody): void {
    this.images.forEach((state) => {
      state.error = null;
    });
    const flag = (imageId: string, message: string) => {
      const state = this.images.find((i) => i.imageId === imageId);
      if (state) {
        state.error = message;
        state.visited = false;
      }
    };
    for (const imageId of error.missing ?? []) {
      flag(imageId, "labels missing");
    }
    for (const imageId of error.images ?? []) {
      flag(imageId, error.message);
    }
    if (error.image) {
      flag(error.image, error.message);
    }
  }
}
