#!/usr/bin/env node
import { hideBin } from "yargs/helpers";

import { run } from "./cli.js";

run(hideBin(process.argv)).catch((err) => {
  console.error(err instanceof Error ? err.message : err);
  process.exit(1);
});
