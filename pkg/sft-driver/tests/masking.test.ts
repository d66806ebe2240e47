import { describe, expect, it } from 'vitest';

import { CorpusRecord } from '../src/corpus.js';
import { IGNORE_INDEX, SpanMismatchError, auditInstance, tokenizeAndMask } from '../src/masking.js';
import { CharTokenizer } from '../src/tokenizer.js';
import { buildTokenizer } from '../src/train.js';
import { readCorpus } from '../src/corpus.js';

const FIXTURE = new URL('../fixtures/corpus.small.jsonl', import.meta.url).pathname;

export function record(system: string, user: string, body: string): CorpusRecord {
  const assistant = `***Answer***\n${body}`;
  return {
    messages: [
      { role: 'system', content: system },
      { role: 'user', content: user },
      { role: 'assistant', content: assistant },
    ],
    answer_span: ['***Answer***\n'.length, assistant.length],
    meta: { instance_id: 'synthetic' },
  };
}

describe('tokenizeAndMask', () => {
  it('masks every position before the assistant content', () => {
    const rec = record('sys text', 'user text', 'a -> b');
    const tok = new CharTokenizer(rec.messages.map((m) => m.content));
    const inst = tokenizeAndMask(rec, tok);
    expect(inst.labels.length).toBe(inst.inputIds.length);
    const firstUnmasked = inst.labels.findIndex((l) => l >= 0);
    expect(firstUnmasked).toBeGreaterThan(0);
    expect(inst.labels.slice(0, firstUnmasked).every((l) => l === IGNORE_INDEX)).toBe(true);
    expect(inst.labels.slice(firstUnmasked).every((l) => l >= 0)).toBe(true);
    expect(tok.decode(inst.labels.filter((l) => l >= 0))).toBe('***Answer***\na -> b');
  });

  it('answer token count equals the edge-line body length', () => {
    const body = 'a -> b';
    const rec = record('s', 'u', body);
    const tok = new CharTokenizer(rec.messages.map((m) => m.content));
    const inst = tokenizeAndMask(rec, tok);
    expect(inst.answerTokenCount).toBe(body.length);
  });

  it('rejects a corrupted span', () => {
    const rec = record('s', 'u', 'a -> b');
    rec.answer_span = [0, 3]; // selects the label, not the body
    const tok = new CharTokenizer(rec.messages.map((m) => m.content));
    expect(() => tokenizeAndMask(rec, tok)).toThrow(SpanMismatchError);
  });

  it('accepts the correct span only', () => {
    const rec = record('s', 'u', 'a -> b');
    const tok = new CharTokenizer(rec.messages.map((m) => m.content));
    expect(() => tokenizeAndMask(rec, tok)).not.toThrow();
    const shifted = { ...rec, answer_span: [rec.answer_span[0] + 1, rec.answer_span[1]] as [number, number] };
    expect(() => tokenizeAndMask(shifted, tok)).toThrow(SpanMismatchError);
  });

  it('rejects an empty answer span', () => {
    const rec = record('s', 'u', 'a -> b');
    rec.answer_span = [3, 3];
    const tok = new CharTokenizer(rec.messages.map((m) => m.content));
    expect(() => tokenizeAndMask(rec, tok)).toThrow(SpanMismatchError);
  });

  it('processes every fixture record with a verified span', () => {
    const records = readCorpus(FIXTURE);
    expect(records.length).toBeGreaterThanOrEqual(4);
    const tok = buildTokenizer(records);
    for (const [i, rec] of records.entries()) {
      const inst = tokenizeAndMask(rec, tok);
      const audit = auditInstance(i, rec, inst);
      expect(audit.maskedPrefix).toBeGreaterThan(0);
      expect(audit.unmaskedSuffix).toBeGreaterThan(0);
      expect(audit.maskedPrefix + audit.unmaskedSuffix).toBe(audit.sequenceLength);
      const assistant = rec.messages[2]!.content;
      expect(tok.decode(inst.labels.filter((l) => l >= 0))).toBe(assistant);
    }
  });
});
