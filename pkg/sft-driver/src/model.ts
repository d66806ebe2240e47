/**
 * A tiny transformer causal language model on tfjs.
 *
 * Small enough to overfit a handful of instances on CPU in seconds, while
 * exercising the same data path (token ids in, next-token logits out) a
 * full-size model would see. Weight init is seeded, so runs are
 * reproducible.
 */

import * as tf from '@tensorflow/tfjs';

export interface ModelConfig {
  vocabSize: number;
  maxSeqLen: number;
  dModel?: number;
  nHeads?: number;
  ffnFactor?: number;
  seed?: number;
}

interface Resolved extends Required<ModelConfig> {}

function resolve(config: ModelConfig): Resolved {
  return {
    dModel: 32,
    nHeads: 2,
    ffnFactor: 4,
    seed: 1,
    ...config,
  };
}

export class TinyCausalLM {
  readonly config: Resolved;
  private readonly weights = new Map<string, tf.Variable>();

  constructor(config: ModelConfig) {
    this.config = resolve(config);
    const { vocabSize, maxSeqLen, dModel, ffnFactor, seed } = this.config;
    // no explicit variable names: tfjs registers names globally and would
    // reject a second model instance
    const init = (name: string, shape: number[], stddev: number, offset: number) =>
      this.weights.set(
        name,
        tf.variable(tf.randomNormal(shape, 0, stddev, 'float32', seed + offset), true),
      );

    init('tok_embed', [vocabSize, dModel], 0.02, 0);
    init('pos_embed', [maxSeqLen, dModel], 0.02, 1);
    init('wq', [dModel, dModel], 0.05, 2);
    init('wk', [dModel, dModel], 0.05, 3);
    init('wv', [dModel, dModel], 0.05, 4);
    init('wo', [dModel, dModel], 0.05, 5);
    init('ffn_w1', [dModel, dModel * ffnFactor], 0.05, 6);
    init('ffn_w2', [dModel * ffnFactor, dModel], 0.05, 7);
    init('head', [dModel, vocabSize], 0.05, 8);
    this.weights.set('ffn_b1', tf.variable(tf.zeros([dModel * ffnFactor]), true));
    this.weights.set('ffn_b2', tf.variable(tf.zeros([dModel]), true));
  }

  get variables(): tf.Variable[] {
    return [...this.weights.values()];
  }

  paramCount(): number {
    return this.variables.reduce((total, v) => total + v.size, 0);
  }

  snapshot(): Float32Array[] {
    return this.variables.map((v) => v.dataSync() as Float32Array);
  }

  private w(name: string): tf.Variable {
    const v = this.weights.get(name);
    if (!v) throw new Error(`missing weight ${name}`);
    return v;
  }

  /** Next-token logits, shape [batch, seq, vocab]. */
  logits(inputIds: tf.Tensor2D): tf.Tensor3D {
    const { dModel, nHeads } = this.config;
    return tf.tidy(() => {
      const [batch, seq] = inputIds.shape;
      // 3D-by-2D matmuls flatten to 2D first: tfjs cannot backprop the
      // broadcast form into the weight.
      const project = (t: tf.Tensor, w: tf.Tensor, outDim: number) =>
        t.reshape([batch * seq, t.shape[t.shape.length - 1]!])
          .matMul(w as tf.Tensor2D)
          .reshape([batch, seq, outDim]);

      // one-hot matmul instead of gather: its gradient is plain matmul,
      // which every backend supports
      const tok = tf
        .oneHot(inputIds.flatten().toInt(), this.config.vocabSize)
        .cast('float32')
        .matMul(this.w('tok_embed') as tf.Tensor2D)
        .reshape([batch, seq, dModel]);
      const pos = this.w('pos_embed').slice([0, 0], [seq, dModel]).expandDims(0);
      let x = tok.add(pos);

      const headDim = dModel / nHeads;
      const split = (t: tf.Tensor) =>
        t.reshape([batch, seq, nHeads, headDim]).transpose([0, 2, 1, 3]);
      const normed = layerNorm(x);
      const q = split(project(normed, this.w('wq'), dModel));
      const k = split(project(normed, this.w('wk'), dModel));
      const v = split(project(normed, this.w('wv'), dModel));

      const scores = q.matMul(k, false, true).div(Math.sqrt(headDim));
      const causal = tf.linalg
        .bandPart(tf.ones([seq, seq]), -1, 0)
        .reshape([1, 1, seq, seq]);
      const masked = scores.mul(causal).add(causal.sub(1).mul(1e9));
      const attention = tf.softmax(masked, -1);
      const context = attention
        .matMul(v)
        .transpose([0, 2, 1, 3])
        .reshape([batch, seq, dModel]);
      x = x.add(project(context, this.w('wo'), dModel));

      const ffnIn = layerNorm(x);
      const hidden = project(ffnIn, this.w('ffn_w1'), dModel * this.config.ffnFactor)
        .add(this.w('ffn_b1'))
        .relu();
      x = x.add(project(hidden, this.w('ffn_w2'), dModel).add(this.w('ffn_b2')));

      return project(layerNorm(x), this.w('head'), this.config.vocabSize) as tf.Tensor3D;
    });
  }

  dispose(): void {
    for (const v of this.variables) v.dispose();
    this.weights.clear();
  }
}

function layerNorm(x: tf.Tensor, epsilon = 1e-5): tf.Tensor {
  const mean = x.mean(-1, true);
  const variance = x.sub(mean).square().mean(-1, true);
  return x.sub(mean).div(variance.add(epsilon).sqrt());
}
