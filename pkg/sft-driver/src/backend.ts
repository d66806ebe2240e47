/**
 * Backend selection: the wasm backend is much faster for the attention
 * matmuls; plain cpu is the safety net when a kernel is missing.
 */

import { createRequire } from 'node:module';
import { dirname, join } from 'node:path';

import * as tf from '@tensorflow/tfjs';
import { setWasmPaths } from '@tensorflow/tfjs-backend-wasm';

let initialized: Promise<string> | null = null;

export function initBackend(prefer: 'wasm' | 'cpu' = 'wasm'): Promise<string> {
  if (!initialized) {
    initialized = (async () => {
      tf.enableProdMode();
      if (prefer === 'wasm') {
        try {
          const require_ = createRequire(import.meta.url);
          const wasmDir = dirname(require_.resolve('@tensorflow/tfjs-backend-wasm'));
          setWasmPaths(join(wasmDir, '/'));
          await tf.setBackend('wasm');
          await tf.ready();
          return tf.getBackend();
        } catch {
          // fall through to cpu
        }
      }
      await tf.setBackend('cpu');
      await tf.ready();
      return tf.getBackend();
    })();
  }
  return initialized;
}
