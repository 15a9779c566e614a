/* tslint:disable */
/* eslint-disable */

/**
 * Outcome of one recovery run.
 */
export class Recovery {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    estimate(): Float64Array;
    /**
     * True spectrum magnitudes, one per bin.
     */
    truth(): Float64Array;
    readonly atoms: number;
    readonly hit_rate: number;
    readonly pcc: number;
}

/**
 * Bin centre frequencies in GHz.
 */
export function binFrequenciesGhz(): Float64Array;

export function lagProfile(pairs: Float64Array): Float64Array;

export function phaseTrace(a_theta: number, f_theta_mhz: number, points: number): Float64Array;

export function recoverPulses(carriers_ghz: Float64Array, pulse_ns: number, snr_db: number, pairs: Float64Array, max_support: number, seed: number): Recovery;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_recovery_free: (a: number, b: number) => void;
    readonly binFrequenciesGhz: () => [number, number];
    readonly lagProfile: (a: number, b: number) => [number, number, number, number];
    readonly phaseTrace: (a: number, b: number, c: number) => [number, number, number, number];
    readonly recoverPulses: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
    readonly recovery_atoms: (a: number) => number;
    readonly recovery_estimate: (a: number) => [number, number];
    readonly recovery_hit_rate: (a: number) => number;
    readonly recovery_pcc: (a: number) => number;
    readonly recovery_truth: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
