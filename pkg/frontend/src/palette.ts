// Class palette ordering and colors.
//
// Classes are ordered by the live imbalance weight, descending, so the
// rarest classes sit first under the annotator's cursor.

export interface PaletteEntry {
  className: string;
  weight: number;
  count: number;
  color: string;
}

const COLORS = [
  "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4",
  "#46f0f0", "#f032e6", "#bcf60c", "#008080", "#9a6324",
  "#800000", "#808000", "#000075", "#fabebe", "#aaffc3",
];

export function classColor(className: string, classes: string[]): string {
  const index = classes.indexOf(className);
  return COLORS[(index >= 0 ? index : classes.length) % COLORS.length];
}

export function buildPalette(
  weights: Record<string, number>,
  counts: Record<string, number>,
  classOrder: string[],
): PaletteEntry[] {
  const entries = Object.keys(weights).map((className) => ({
    className,
    weight: weights[className],
    count: counts[className] ?? 0,
    color: classColor(className, classOrder),
  }));
  entries.sort(
    (a, b) =>
      b.weight - a.weight || a.className.localeCompare(b.className),
  );
  return entries;
}
