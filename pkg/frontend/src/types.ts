// Payload shapes of the curation service API.

export interface SessionInfo {
  session_id: string;
  status: "awaiting_labels" | "exhausted";
  method: string;
  seed: number;
  batch_size: number;
  batches: number;
  classes: string[];
}

export interface Suggestion {
  box: [number, number, number, number]; // normalized cx, cy, w, h
  pixel_box: [number, number, number, number]; // xmin, ymin, xmax, ymax
  confidence: number;
  top_classes: [string, number][];
  margin: number;
  unknown: boolean;
}

export interface BatchImage {
  image_id: string;
  width: number;
  height: number;
  score: number;
  suggestions: Suggestion[];
}

export interface PendingBatch {
  session_id: string;
  step: number;
  batch_id: number;
  batch_value: number;
  method: string;
  images: BatchImage[];
}

export interface LabelBox {
  class_name: string;
  xmin: number;
  ymin: number;
  xmax: number;
  ymax: number;
}

export interface LabelSubmission {
  image: string;
  boxes: LabelBox[];
  note?: string;
}

export interface CurvePoint {
  samples: number;
  per_class_ap: Record<string, number>;
  map: number;
}

export interface Progress {
  session_id: string;
  status: string;
  step: number;
  samples_labeled: number;
  batches_remaining: number;
  curve: CurvePoint[];
  class_counts: Record<string, number>;
  class_weights: Record<string, number>;
}

export interface SelectionRecord {
  step: number;
  batch_id: number;
  batch_value: number;
  per_image_scores: Record<string, number>;
  method: string;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  missing?: string[];
  images?: string[];
  image?: string;
}
