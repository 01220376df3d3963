/* tslint:disable */
/* eslint-disable */

/**
 * A running simulation, advanced one step per call.
 */
export class Simulation {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Advances one step and returns its diagnostics record as JSON.
     */
    advance(): string;
    /**
     * All records so far, as a JSON array.
     */
    history(): string;
    last_record(): string;
    /**
     * `config` is a run configuration in JSON; the output section is ignored.
     */
    constructor(config: string);
    /**
     * φ at the centers of a `res × res` pixel grid, row 0 at the top.
     */
    phi_image(res: number): Float64Array;
    /**
     * Speed |v| on the same grid as `phi_image`.
     */
    speed_image(res: number): Float64Array;
    readonly step: number;
    readonly steps: number;
    readonly time: number;
}

/**
 * Default configuration JSON for a scenario name, as the CLI would resolve it.
 */
export function default_config(scenario: string): string;

/**
 * Runs a manufactured-solution case on levels `first..=last` and returns
 * `{"rows": [...], "rates": [...]}` as JSON. Level i uses n = 5·2^i and
 * Δt = 0.2/2^i.
 */
export function mms_rates(_case: number, first: number, last: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_simulation_free: (a: number, b: number) => void;
    readonly default_config: (a: number, b: number) => [number, number, number, number];
    readonly mms_rates: (a: number, b: number, c: number) => [number, number, number, number];
    readonly simulation_advance: (a: number) => [number, number, number, number];
    readonly simulation_history: (a: number) => [number, number, number, number];
    readonly simulation_last_record: (a: number) => [number, number, number, number];
    readonly simulation_new: (a: number, b: number) => [number, number, number];
    readonly simulation_phi_image: (a: number, b: number) => [number, number, number, number];
    readonly simulation_speed_image: (a: number, b: number) => [number, number, number, number];
    readonly simulation_step: (a: number) => number;
    readonly simulation_steps: (a: number) => number;
    readonly simulation_time: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
