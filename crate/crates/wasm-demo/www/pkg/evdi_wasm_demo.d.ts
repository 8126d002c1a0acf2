/* tslint:disable */
/* eslint-disable */

export class Scene {
    free(): void;
    [Symbol.dispose](): void;
    blur_rgba(): Uint8Array;
    deblur_rgba(theta: number): Uint8Array;
    fit_theta(): number;
    height(): number;
    latent_rgba(theta: number, s: number): Uint8Array;
    loss_curve(lo: number, hi: number, n: number): Float64Array;
    constructor(theta: number, speed: number);
    /**
     * `[psnr(blur), psnr(deblur at theta)]` in dB.
     */
    psnr_pair(theta: number): Float64Array;
    sharp_rgba(): Uint8Array;
    width(): number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_scene_free: (a: number, b: number) => void;
    readonly scene_blur_rgba: (a: number) => [number, number, number, number];
    readonly scene_deblur_rgba: (a: number, b: number) => [number, number, number, number];
    readonly scene_fit_theta: (a: number) => [number, number, number];
    readonly scene_height: (a: number) => number;
    readonly scene_latent_rgba: (a: number, b: number, c: number) => [number, number, number, number];
    readonly scene_loss_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly scene_new: (a: number, b: number) => [number, number, number];
    readonly scene_psnr_pair: (a: number, b: number) => [number, number, number, number];
    readonly scene_sharp_rgba: (a: number) => [number, number, number, number];
    readonly scene_width: (a: number) => number;
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
