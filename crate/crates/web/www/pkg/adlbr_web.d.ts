/* tslint:disable */
/* eslint-disable */

export class Restoration {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    pixels(): Float64Array;
    /**
     * Relative L2 distance to the closed-form smoothed stripe.
     */
    error: number;
    /**
     * Conjugate gradient iterations.
     */
    iterations: number;
}

export function noisyStripes(n: number, kappa: number, noise_sd: number, seed: number): Float64Array;

export function restore(pixels: Float64Array, n: number, kappa: number, lambda: number, scheme: string, tensor: string): Restoration;

export function stencil(kappa: number, theta: number, scheme: string): string;

export function symbolGrid(kappa: number, theta: number, scheme: string, res: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_get_restoration_error: (a: number) => number;
    readonly __wbg_get_restoration_iterations: (a: number) => number;
    readonly __wbg_restoration_free: (a: number, b: number) => void;
    readonly __wbg_set_restoration_error: (a: number, b: number) => void;
    readonly __wbg_set_restoration_iterations: (a: number, b: number) => void;
    readonly noisyStripes: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly restoration_pixels: (a: number) => [number, number];
    readonly restore: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number];
    readonly stencil: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly symbolGrid: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
