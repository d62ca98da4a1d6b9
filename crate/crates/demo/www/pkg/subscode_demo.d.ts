/* tslint:disable */
/* eslint-disable */

/**
 * A trigram model over an excerpt of the bundled corpus.
 */
export class SubstituteModel {
    free(): void;
    [Symbol.dispose](): void;
    constructor();
    /**
     * Top-`k` substitutes for the token at `position`, one
     * `word<TAB>probability` line each.
     */
    substitutes(sentence: string, position: number, k: number): string;
    vocabulary_size(): number;
}

/**
 * Exact log-likelihood after each full-batch ascent step on a random
 * `size x size` co-occurrence instance.
 */
export function ascent_curve(seed: number, size: number, dim: number, step: number, iterations: number): Float64Array;

/**
 * Trains on synthetic block data in two dimensions and returns the points
 * as `[phi_x0, phi_y0, .., psi_x0, psi_y0, ..]`, X vectors first. Word
 * `i` on either side belongs to block `i / per_block`.
 */
export function train_blocks(seed: number, blocks: number, per_block: number, epochs: number, z_constant: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_substitutemodel_free: (a: number, b: number) => void;
    readonly ascent_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly substitutemodel_new: () => [number, number, number];
    readonly substitutemodel_substitutes: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly substitutemodel_vocabulary_size: (a: number) => number;
    readonly train_blocks: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
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
