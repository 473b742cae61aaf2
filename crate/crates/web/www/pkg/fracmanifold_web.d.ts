/* tslint:disable */
/* eslint-disable */

/**
 * Manifold of the first example at `p = 1/2` over `σ_1 ∈ [-max, max]`.
 * Rows of `[σ_1, σ_2, σ_3, closed-form σ_2, closed-form σ_3]`, flattened.
 */
export function ex1_curve(sigma_max: number, count: number, step: number): Float64Array;

/**
 * `σ_2(σ_1, σ_3)` of the Liu system at `p = 1/2` on a `count × count` grid,
 * row-major with `σ_1` varying slowest.
 */
export function liu_surface(sigma_max: number, count: number, step: number): Float64Array;

/**
 * `E_{p,β}(z)` as `[re, im, branch]` with branch 0 for the series and 1 for
 * the asymptotic expansion.
 */
export function ml_eval(p: number, beta: number, re: number, im: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly ex1_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly liu_surface: (a: number, b: number, c: number) => [number, number, number, number];
    readonly ml_eval: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
