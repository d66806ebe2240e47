import * as tf from '@tensorflow/tfjs';
import { describe, expect, it } from 'vitest';

import { initBackend } from '../src/backend.js';
import { manualAnswerLoss, maskedCrossEntropy } from '../src/loss.js';
import { TinyCausalLM } from '../src/model.js';
import { buildBatch, buildTokenizer } from '../src/train.js';
import { record } from './masking.test.js';

await initBackend();

function smallSetup() {
  const records = [
    record('sys one', 'user one', 'a -> b'),
    record('sys two', 'user two longer', 'b -> c\nc -> d'),
    record('sys three', 'u', '(no edges)'),
    record('s', 'user four', 'x -> y'),
  ];
  const tokenizer = buildTokenizer(records);
  const { batch } = buildBatch(records, tokenizer);
  const model = new TinyCausalLM({
    vocabSize: tokenizer.vocabSize,
    maxSeqLen: batch.seqLen,
    dModel: 16,
    seed: 3,
  });
  return { batch, model };
}

describe('masked loss', () => {
  it('framework loss equals the manual answer-only loss within 1e-5', () => {
    const { batch, model } = smallSetup();
    const logits = model.logits(batch.inputIds);
    const framework = maskedCrossEntropy(logits, batch.labels).dataSync()[0]!;
    const manual = manualAnswerLoss(
      logits.arraySync() as number[][][],
      batch.labels.arraySync() as number[][],
    );
    expect(Math.abs(framework - manual)).toBeLessThan(1e-5);
  });

  it('is unchanged when masked label values are shuffled among negatives', () => {
    const { batch, model } = smallSetup();
    const logits = model.logits(batch.inputIds);
    const base = maskedCrossEntropy(logits, batch.labels).dataSync()[0]!;

    const labels = batch.labels.arraySync() as number[][];
    let counter = 1;
    const scrambled = labels.map((row) =>
      row.map((label) => (label < 0 ? -((counter += 7) % 997) - 1 : label)),
    );
    const scrambledTensor = tf.tensor2d(scrambled, batch.labels.shape, 'int32');
    const perturbed = maskedCrossEntropy(logits, scrambledTensor).dataSync()[0]!;
    expect(perturbed).toBe(base);
  });

  it('fails loudly with no unmasked positions', () => {
    const logits = [[[0.1, 0.2], [0.3, 0.4]]];
    expect(() => manualAnswerLoss(logits, [[-100, -100]])).toThrow(/no unmasked/);
  });

  it('decreases when the model is told the answer', () => {
    // sanity: a logit bump on the true next token lowers the loss
    const { batch, model } = smallSetup();
    const logits = model.logits(batch.inputIds);
    const base = maskedCrossEntropy(logits, batch.labels).dataSync()[0]!;
    const labels = batch.labels.arraySync() as number[][];
    const boosted = (logits.arraySync() as number[][][]).map((rows, b) =>
      rows.map((row, t) => {
        const target = labels[b]![t + 1];
        if (target === undefined || target < 0) return row;
        return row.map((v, k) => (k === target ? v + 2 : v));
      }),
    );
    const better = maskedCrossEntropy(
      tf.tensor3d(boosted, logits.shape as [number, number, number]),
      batch.labels,
    ).dataSync()[0]!;
    expect(better).toBeLessThan(base);
  });
});
