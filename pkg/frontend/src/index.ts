export { loadRun, loadTrack, loadSpeed } from "./artifacts.js";
export type { RunArtifacts, Track, Speed, IterationRecord } from "./artifacts.js";
export { boundaryPolylines, deviationFromReference, leftNormal } from "./geometry.js";
export { FIGURES, renderFigure, overheadFigure, deviationFigure,
         profilesFigure, laptimesFigure } from "./figures.js";
export type { FigureName } from "./figures.js";
export { parseCsv, readCsv } from "./csv.js";
