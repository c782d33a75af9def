export { render, FigureSpec, FigureKind } from "./figures";
export { readCsv, requireColumns, numericColumn, SchemaError } from "./csv";
export { main as cliMain, parseArgs } from "./cli";
