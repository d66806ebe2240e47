/**
 * Answer-only next-token loss.
 *
 * Labels align with input ids; position t is scored by the logits at
 * position t-1 (the usual one-step shift), and any negative label is
 * ignored. The manual variant recomputes the same quantity with plain
 * float64 loops straight from the logits array, as an independent check
 * of the masking semantics.
 */

import * as tf from '@tensorflow/tfjs';

export function maskedCrossEntropy(logits: tf.Tensor3D, labels: tf.Tensor2D): tf.Scalar {
  return tf.tidy(() => {
    const [batch, seq, vocab] = logits.shape;
    const predictions = logits.slice([0, 0, 0], [batch, seq - 1, vocab]);
    const targets = labels.slice([0, 1], [batch, seq - 1]);
    const mask = targets.greaterEqual(0);
    const safeTargets = tf.where(mask, targets, tf.zerosLike(targets)).toInt();
    const logProbs = tf.logSoftmax(predictions, -1);
    const picked = tf
      .oneHot(safeTargets, vocab)
      .mul(logProbs)
      .sum(-1)
      .mul(mask.cast('float32'));
    const count = mask.cast('float32').sum();
    return picked.sum().div(count).neg().asScalar();
  });
}

/** Same loss, recomputed with float64 arithmetic outside the framework. */
export function manualAnswerLoss(logitsArray: number[][][], labelsArray: number[][]): number {
  let total = 0;
  let count = 0;
  for (let b = 0; b < logitsArray.length; b += 1) {
    const rows = logitsArray[b]!;
    const labels = labelsArray[b]!;
    for (let t = 1; t < labels.length; t += 1) {
      const target = labels[t]!;
      if (target < 0) continue;
      const row = rows[t - 1]!;
      let max = -Infinity;
      for (const value of row) max = Math.max(max, value);
      let sumExp = 0;
      for (const value of row) sumExp += Math.exp(value - max);
      total += Math.log(sumExp) + max - row[target]!;
      count += 1;
    }
  }
  if (count === 0) throw new Error('no unmasked positions to score');
  return total / count;
}
