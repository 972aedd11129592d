/* tslint:disable */
/* eslint-disable */

/**
 * A rendered crossing scenario tracked with or without the occlusion judge.
 */
export class CrossingRun {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Grayscale bytes of frame `i`, row-major.
     */
    frame(i: number): Uint8Array;
    frame_count(): number;
    height(): number;
    constructor(seed: bigint, with_judge: boolean);
    summary(): string;
    width(): number;
}

/**
 * ε over a grid of scores in [0, 1] and interferer distances in [0, max_dis].
 */
export function epsilon_surface(mix_weight: number, threshold: number, max_dis: number, steps: number): string;

/**
 * A response map made of `bumps` Gaussian blobs plus noise, with its peaks.
 */
export function peak_demo(seed: bigint, size: number, k: number, bumps: number, noise: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_crossingrun_free: (a: number, b: number) => void;
    readonly crossingrun_frame: (a: number, b: number) => [number, number];
    readonly crossingrun_frame_count: (a: number) => number;
    readonly crossingrun_height: (a: number) => number;
    readonly crossingrun_new: (a: bigint, b: number) => [number, number, number];
    readonly crossingrun_summary: (a: number) => [number, number];
    readonly crossingrun_width: (a: number) => number;
    readonly epsilon_surface: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly peak_demo: (a: bigint, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
