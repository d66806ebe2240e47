/**
 * Usage:
 *   npm run train -- --corpus fixtures/corpus.small.jsonl --steps 30 --out outdir
 */

import { mkdirSync } from 'node:fs';
import { join } from 'node:path';
import { parseArgs } from 'node:util';

import { initBackend } from './backend.js';
import { readCorpus } from './corpus.js';
import { trainSmoke, writeAuditReport, writeLossTrace } from './train.js';

const { values } = parseArgs({
  options: {
    corpus: { type: 'string' },
    steps: { type: 'string', default: '30' },
    lr: { type: 'string', default: '0.01' },
    out: { type: 'string', default: 'out' },
  },
});

if (!values.corpus) {
  console.error('error: --corpus <jsonl> is required');
  process.exit(2);
}

const backend = await initBackend();
const records = readCorpus(values.corpus);
const steps = Number.parseInt(values.steps!, 10);
const result = trainSmoke(records, { steps, learningRate: Number.parseFloat(values.lr!) });

mkdirSync(values.out!, { recursive: true });
writeLossTrace(result.losses, join(values.out!, 'loss_trace.csv'));
writeAuditReport(result.audits, join(values.out!, 'mask_audit.json'));

const first = result.losses[0];
const last = result.losses[result.losses.length - 1];
console.log(`trained ${steps} steps on ${records.length} records (${result.paramCount} params, ${backend} backend)`);
if (first !== undefined && last !== undefined) {
  console.log(`loss ${first.toFixed(4)} -> ${last.toFixed(4)}`);
}
console.log(`wrote ${join(values.out!, 'loss_trace.csv')} and mask_audit.json`);
