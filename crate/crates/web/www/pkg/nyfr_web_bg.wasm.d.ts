/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_recovery_free: (a: number, b: number) => void;
export const binFrequenciesGhz: () => [number, number];
export const lagProfile: (a: number, b: number) => [number, number, number, number];
export const phaseTrace: (a: number, b: number, c: number) => [number, number, number, number];
export const recoverPulses: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
export const recovery_atoms: (a: number) => number;
export const recovery_estimate: (a: number) => [number, number];
export const recovery_hit_rate: (a: number) => number;
export const recovery_pcc: (a: number) => number;
export const recovery_truth: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
