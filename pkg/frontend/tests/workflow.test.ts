import { describe, expect, it } from "vitest";

import { BatchWorkflow } from "../src/workflow.js";
import type { PendingBatch, Suggestion } from "../src/types.js";

function suggestion(
  pixelBox: [number, number, number, number],
  className = "car",
  margin = 0.8,
): Suggestion {
  return {
    box: [0.5, 0.5, 0.2, 0.2],
    pixel_box: pixelBox,
    confidence: 0.7,
    top_classes: [
      [className, 0.6],
      ["bus", 0.3],
    ],
    margin,
    unknown: false,
  };
}

function batch(): PendingBatch {
  return {
    session_id: "s1",
    step: 0,
    batch_id: 3,
    batch_value: 1.5,
    method: "sum+w",
    images: [
      {
        image_id: "a",
        width: 500,
        height: 375,
        score: 1.0,
        suggestions: [suggestion([48.2, 240.4, 195.0, 370.6])],
      },
      {
        image_id: "b",
        width: 500,
        height: 375,
        score: 0.5,
        suggestions: [
          suggestion([10, 10, 60, 60]),
          suggestion([100, 100, 200, 180], "tram"),
        ],
      },
      { image_id: "c", width: 500, height: 375, score: 0.0, suggestions: [] },
    ],
  };
}

describe("suggestion handling", () => {
  it("accept-all yields a payload equal to the suggestion boxes", () => {
    const flow = new BatchWorkflow(batch());
    flow.acceptAllSuggestions("a");
    flow.acceptAllSuggestions("b");
    flow.markNoObjects("c");
    const payload = flow.buildSubmission();
    expect(payload).toEqual([
      {
        image: "a",
        boxes: [
          { class_name: "car", xmin: 48, ymin: 240, xmax: 195, ymax: 371 },
        ],
      },
      {
        image: "b",
        boxes: [
          { class_name: "car", xmin: 10, ymin: 10, xmax: 60, ymax: 60 },
          { class_name: "tram", xmin: 100, ymin: 100, xmax: 200, ymax: 180 },
        ],
      },
      { image: "c", boxes: [] },
    ]);
  });

  it("rejected suggestions add no boxes", () => {
    const flow = new BatchWorkflow(batch());
    flow.rejectSuggestion("b", 0);
    flow.acceptAllSuggestions("b");
    expect(flow.images[1].boxes).toHaveLength(1);
    expect(flow.images[1].boxes[0].className).toBe("tram");
    expect(flow.acceptSuggestion("b", 0)).toBeNull(); // already rejected
  });

  it("rendered boxes map one-to-one onto payload boxes", () => {
    const flow = new BatchWorkflow(batch());
    flow.acceptAllSuggestions("a");
    flow.addBox("a", { xmin: 5, ymin: 6, xmax: 50, ymax: 60 }, "bus");
    const payload = flow.buildSubmission()[0];
    expect(payload.boxes).toHaveLength(flow.images[0].boxes.length);
    flow.images[0].boxes.forEach((box, index) => {
      expect(payload.boxes[index]).toEqual({
        class_name: box.className,
        xmin: box.xmin,
        ymin: box.ymin,
        xmax: box.xmax,
        ymax: box.ymax,
      });
    });
  });
});

describe("drawing and editing", () => {
  it("clamps drawn boxes to the image and drops degenerate ones", () => {
    const flow = new BatchWorkflow(batch());
    const box = flow.addBox("a", { xmin: -20, ymin: 0, xmax: 80, ymax: 9000 }, "car");
    expect(box).toEqual({
      xmin: 0,
      ymin: 0,
      xmax: 80,
      ymax: 375,
      className: "car",
      fromSuggestion: false,
    });
    expect(flow.addBox("a", { xmin: 10, ymin: 10, xmax: 10, ymax: 10 }, "car"))
      .toBeNull();
  });

  it("moves boxes within bounds", () => {
    const flow = new BatchWorkflow(batch());
    flow.addBox("a", { xmin: 0, ymin: 0, xmax: 10, ymax: 10 }, "car");
    flow.moveBox("a", 0, -100, 5);       // would leave the image: ignored
    expect(flow.images[0].boxes[0].xmin).toBe(0);
    expect(flow.images[0].boxes[0].ymin).toBe(0);
    flow.moveBox("a", 0, 20, 30);
    expect(flow.images[0].boxes[0]).toMatchObject({ xmin: 20, ymin: 30 });
  });

  it("removes boxes", () => {
    const flow = new BatchWorkflow(batch());
    flow.addBox("a", { xmin: 0, ymin: 0, xmax: 10, ymax: 10 }, "car");
    flow.removeBox("a", 0);
    expect(flow.images[0].boxes).toHaveLength(0);
  });

  it("no-objects clears boxes and rejects remaining suggestions", () => {
    const flow = new BatchWorkflow(batch());
    flow.addBox("b", { xmin: 0, ymin: 0, xmax: 10, ymax: 10 }, "car");
    flow.markNoObjects("b");
    expect(flow.images[1].boxes).toHaveLength(0);
    expect(flow.images[1].noObjects).toBe(true);
    expect(flow.images[1].suggestionStatus).toEqual(["rejected", "rejected"]);
    expect(flow.buildSubmission()[1]).toEqual({ image: "b", boxes: [] });
  });
});

describe("submit gate", () => {
  it("blocks until every image is visited and resolved", () => {
    const flow = new BatchWorkflow(batch());
    expect(flow.canSubmit()).toBe(false);
    flow.acceptAllSuggestions("a");
    expect(flow.blockingImages()).toEqual(["b", "c"]);
    flow.goTo(1);
    flow.acceptAllSuggestions("b");
    expect(flow.canSubmit()).toBe(false); // c not visited
    flow.goTo(2);
    expect(flow.canSubmit()).toBe(false); // c visited but unresolved
    flow.markNoObjects("c");
    expect(flow.canSubmit()).toBe(true);
    expect(flow.blockingImages()).toEqual([]);
  });

  it("navigation marks images visited", () => {
    const flow = new BatchWorkflow(batch());
    expect(flow.images[0].visited).toBe(true);
    flow.next();
    expect(flow.images[1].visited).toBe(true);
    flow.prev();
    expect(flow.index).toBe(0);
  });
});

describe("server validation errors", () => {
  it("highlights images the service listed as missing", () => {
    const flow = new BatchWorkflow(batch());
    flow.images.forEach((image) => {
      image.visited = true;
      image.noObjects = true;
    });
    flow.applyServerError({
      code: "incomplete",
      message: "labels missing for some images",
      missing: ["b", "c"],
    });
    expect(flow.images[1].error).toBe("labels missing");
    expect(flow.images[1].visited).toBe(false);
    expect(flow.images[2].visited).toBe(false);
    expect(flow.images[0].error).toBeNull();
    expect(flow.canSubmit()).toBe(false);
  });

  it("flags a single offending image", () => {
    const flow = new BatchWorkflow(batch());
    flow.applyServerError({
      code: "invalid_box",
      message: "inverted box",
      image: "a",
    });
    expect(flow.images[0].error).toBe("inverted box");
  });

  it("rejects labels for unknown images", () => {
    const flow = new BatchWorkflow(batch());
    expect(() => flow.addBox("zz", { xmin: 0, ymin: 0, xmax: 5, ymax: 5 }, "car"))
      .toThrow(/not part of the pending batch/);
  });
});
