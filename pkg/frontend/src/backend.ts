/**
 * Selects the fastest available tensor backend.  The wasm backend is
 * several times faster than the plain JS kernels in Node; fall back
 * silently if it cannot initialize.
 */

import { createRequire } from "node:module";
import * as path from "node:path";

import * as tf from "@tensorflow/tfjs";
import { setWasmPaths } from "@tensorflow/tfjs-backend-wasm";

let ready: Promise<string> | null = null;

export function initBackend(): Promise<string> {
  if (!ready) {
    ready = (async () => {
      try {
        const require = createRequire(import.meta.url);
        const wasmDir = path.dirname(
          require.resolve("@tensorflow/tfjs-backend-wasm/dist/tf-backend-wasm.js"),
        );
        setWasmPaths(wasmDir + path.sep);
        if (await tf.setBackend("wasm")) {
          await tf.ready();
          return tf.getBackend();
        }
      } catch {
        // fall through to the default backend
      }
      await tf.ready();
      return tf.getBackend();
    })();
  }
  return ready;
}
