/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_crossingrun_free: (a: number, b: number) => void;
export const crossingrun_frame: (a: number, b: number) => [number, number];
export const crossingrun_frame_count: (a: number) => number;
export const crossingrun_height: (a: number) => number;
export const crossingrun_new: (a: bigint, b: number) => [number, number, number];
export const crossingrun_summary: (a: number) => [number, number];
export const crossingrun_width: (a: number) => number;
export const epsilon_surface: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const peak_demo: (a: bigint, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
