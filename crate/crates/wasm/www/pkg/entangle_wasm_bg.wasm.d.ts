/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_stateview_free: (a: number, b: number) => void;
export const __wbg_trajectory_free: (a: number, b: number) => void;
export const resonanceRun: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const stateView: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const stateview_bound_satisfied: (a: number) => number;
export const stateview_e_n: (a: number) => number;
export const stateview_four_det_gamma: (a: number) => number;
export const stateview_half_width: (a: number) => number;
export const stateview_label: (a: number) => [number, number];
export const stateview_points: (a: number) => number;
export const stateview_threshold: (a: number) => number;
export const stateview_wigner_minus: (a: number) => [number, number];
export const stateview_wigner_plus: (a: number) => [number, number];
export const thresholdCurve: (a: number, b: number, c: number) => [number, number, number, number];
export const trajectory_e_n: (a: number) => [number, number];
export const trajectory_times: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
