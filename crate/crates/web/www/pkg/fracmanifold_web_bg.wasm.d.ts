/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const ex1_curve: (a: number, b: number, c: number) => [number, number, number, number];
export const liu_surface: (a: number, b: number, c: number) => [number, number, number, number];
export const ml_eval: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
