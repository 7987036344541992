/** Minimal local typings for packages without bundled declarations. */

declare module "papaparse" {
  export interface ParseError {
    type: string;
    code: string;
    message: string;
    row?: number;
  }
  export interface ParseResult<T> {
    data: T[];
    errors: ParseError[];
    meta: { fields?: string[] };
  }
  export interface ParseConfig {
    header?: boolean;
    skipEmptyLines?: boolean | "greedy";
  }
  function parse<T>(input: string, config?: ParseConfig): ParseResult<T>;
  const Papa: { parse: typeof parse };
  export default Papa;
}

declare module "yargs" {
  export interface Options {
    type?: "string" | "number" | "boolean";
    array?: boolean;
    choices?: ReadonlyArray<string>;
    demandOption?: boolean;
    describe?: string;
    default?: unknown;
  }
  export interface Arguments {
    [key: string]: unknown;
    _: Array<string | number>;
    $0: string;
  }
  export interface Argv {
    scriptName(name: string): Argv;
    command(
      cmd: string,
      description: string,
      builder: (y: Argv) => Argv,
      handler: (args: Arguments) => void,
    ): Argv;
    option(key: string, opts: Options): Argv;
    demandCommand(min: number, msg?: string): Argv;
    strict(): Argv;
    exitProcess(enabled: boolean): Argv;
    fail(fn: (msg: string | null, err: Error | undefined) => void): Argv;
    parseAsync(): Promise<Arguments>;
  }
  function yargs(argv?: ReadonlyArray<string>): Argv;
  export default yargs;
}
