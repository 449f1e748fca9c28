/* tslint:disable */
/* eslint-disable */

/**
 * Two-mode state built from squeezed normal modes, with its diagnostics and
 * Wigner grids of Q_+ and Q_- (row-major, rows index Q).
 */
export class StateView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly bound_satisfied: boolean;
    readonly e_n: number;
    readonly four_det_gamma: number;
    readonly half_width: number;
    readonly label: string;
    readonly points: number;
    /**
     * ½ arccosh(coth β).
     */
    readonly threshold: number;
    readonly wigner_minus: Float64Array;
    readonly wigner_plus: Float64Array;
}

/**
 * E_N(t) samples of a resonance run.
 */
export class Trajectory {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly e_n: Float64Array;
    readonly times: Float64Array;
}

export function resonanceRun(mode: string, eta: number, beta: number, amplitude: number, t_f: number, samples: number): Trajectory;

export function stateView(r_minus: number, r_plus: number, beta: number, points: number, half_width: number): StateView;

export function thresholdCurve(beta_min: number, beta_max: number, n: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_stateview_free: (a: number, b: number) => void;
    readonly __wbg_trajectory_free: (a: number, b: number) => void;
    readonly resonanceRun: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly stateView: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly stateview_bound_satisfied: (a: number) => number;
    readonly stateview_e_n: (a: number) => number;
    readonly stateview_four_det_gamma: (a: number) => number;
    readonly stateview_half_width: (a: number) => number;
    readonly stateview_label: (a: number) => [number, number];
    readonly stateview_points: (a: number) => number;
    readonly stateview_threshold: (a: number) => number;
    readonly stateview_wigner_minus: (a: number) => [number, number];
    readonly stateview_wigner_plus: (a: number) => [number, number];
    readonly thresholdCurve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly trajectory_e_n: (a: number) => [number, number];
    readonly trajectory_times: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
