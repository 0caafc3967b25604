/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_get_restoration_error: (a: number) => number;
export const __wbg_get_restoration_iterations: (a: number) => number;
export const __wbg_restoration_free: (a: number, b: number) => void;
export const __wbg_set_restoration_error: (a: number, b: number) => void;
export const __wbg_set_restoration_iterations: (a: number, b: number) => void;
export const noisyStripes: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const restoration_pixels: (a: number) => [number, number];
export const restore: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number];
export const stencil: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const symbolGrid: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
