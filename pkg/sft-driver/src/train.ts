/**
 * The smoke-training loop: tokenize a corpus, mask everything but the
 * answers, and run a few optimizer steps on the tiny model to prove the
 * data path end to end. Writes a per-step loss trace and a masked-token
 * audit report.
 */

import { writeFileSync } from 'node:fs';

import * as tf from '@tensorflow/tfjs';

import { CorpusRecord } from './corpus.js';
import {
  MaskAudit,
  TokenizedInstance,
  auditInstance,
  tokenizeAndMask,
} from './masking.js';
import { CharTokenizer, PAD } from './tokenizer.js';
import { ModelConfig, TinyCausalLM } from './model.js';
import { maskedCrossEntropy } from './loss.js';
import { IGNORE_INDEX } from './masking.js';

export interface TrainOptions {
  steps: number;
  learningRate?: number;
  dModel?: number;
  seed?: number;
}

export interface TrainResult {
  losses: number[];
  audits: MaskAudit[];
  paramCount: number;
}

export interface Batch {
  inputIds: tf.Tensor2D;
  labels: tf.Tensor2D;
  seqLen: number;
}

export function buildTokenizer(records: CorpusRecord[]): CharTokenizer {
  return new CharTokenizer(records.flatMap((r) => r.messages.map((m) => m.content)));
}

export function buildBatch(
  records: CorpusRecord[],
  tokenizer: CharTokenizer,
): { batch: Batch; instances: TokenizedInstance[]; audits: MaskAudit[] } {
  if (records.length === 0) throw new Error('empty corpus');
  const instances = records.map((record) => tokenizeAndMask(record, tokenizer));
  for (const instance of instances) {
    if (!instance.labels.some((label) => label >= 0)) {
      throw new Error('degenerate instance: every position is masked');
    }
  }
  const audits = instances.map((instance, i) => auditInstance(i, records[i]!, instance));
  const seqLen = Math.max(...instances.map((i) => i.inputIds.length));
  const padId = tokenizer.specialId(PAD);
  const ids = instances.map((i) => pad(i.inputIds, seqLen, padId));
  const labels = instances.map((i) => pad(i.labels, seqLen, IGNORE_INDEX));
  return {
    batch: {
      inputIds: tf.tensor2d(ids, [records.length, seqLen], 'int32'),
      labels: tf.tensor2d(labels, [records.length, seqLen], 'int32'),
      seqLen,
    },
    instances,
    audits,
  };
}

function pad(values: number[], length: number, fill: number): number[] {
  return values.length >= length
    ? values.slice(0, length)
    : [...values, ...Array(length - values.length).fill(fill)];
}

export function trainSmoke(records: CorpusRecord[], options: TrainOptions): TrainResult {
  if (records.length < 4) {
    throw new Error(`smoke training needs at least 4 records, got ${records.length}`);
  }
  const tokenizer = buildTokenizer(records);
  const { batch, audits } = buildBatch(records, tokenizer);
  const model = new TinyCausalLM({
    vocabSize: tokenizer.vocabSize,
    maxSeqLen: batch.seqLen,
    dModel: options.dModel ?? 32,
    seed: options.seed ?? 1,
  } satisfies ModelConfig);

  const optimizer = tf.train.adam(options.learningRate ?? 0.01);
  const losses: number[] = [];
  try {
    for (let step = 0; step < options.steps; step += 1) {
      const cost = optimizer.minimize(
        () => maskedCrossEntropy(model.logits(batch.inputIds), batch.labels),
        true,
        model.variables,
      );
      losses.push(cost!.dataSync()[0]!);
      cost!.dispose();
    }
    return { losses, audits, paramCount: model.paramCount() };
  } finally {
    optimizer.dispose();
    model.dispose();
    batch.inputIds.dispose();
    batch.labels.dispose();
  }
}

export function lossTraceCsv(losses: number[]): string {
  const lines = ['step,loss', ...losses.map((loss, i) => `${i},${loss.toFixed(6)}`)];
  return lines.join('\n') + '\n';
}

export function auditReportJson(audits: MaskAudit[]): string {
  return JSON.stringify({ instances: audits }, null, 2) + '\n';
}

export function writeLossTrace(losses: number[], path: string): void {
  writeFileSync(path, lossTraceCsv(losses), 'utf-8');
}

export function writeAuditReport(audits: MaskAudit[], path: string): void {
  writeFileSync(path, auditReportJson(audits), 'utf-8');
}
