/**
 * Chat templating and answer-only label masking.
 *
 * The template lays the conversation out as
 *
 *   <|system|>\n{system}\n<|user|>\n{user}\n<|assistant|>\n{assistant}<|eos|>
 *
 * Labels copy the input ids, with every position before the assistant
 * content (role markers, system, user) set to the ignore index so the
 * loss only sees the assistant's answer. The stored character span is
 * verified by decoding the unmasked tail back into text: templating or
 * offset bugs surface as a SpanMismatchError, never as silent training on
 * the wrong tokens.
 */

import { CorpusRecord, messageByRole } from './corpus.js';
import {
  ASSISTANT_MARK,
  CharTokenizer,
  EOS,
  SYSTEM_MARK,
  USER_MARK,
} from './tokenizer.js';

export const IGNORE_INDEX = -100;

export class SpanMismatchError extends Error {}

export interface TokenizedInstance {
  inputIds: number[];
  /** Same length as inputIds; negative values are ignored by the loss. */
  labels: number[];
  answerTokenCount: number;
}

export function renderTemplate(record: CorpusRecord): string {
  const system = messageByRole(record, 'system');
  const user = messageByRole(record, 'user');
  const assistant = messageByRole(record, 'assistant');
  return `${SYSTEM_MARK}\n${system}\n${USER_MARK}\n${user}\n${ASSISTANT_MARK}\n${assistant}${EOS}`;
}

export function tokenizeAndMask(record: CorpusRecord, tokenizer: CharTokenizer): TokenizedInstance {
  const system = messageByRole(record, 'system');
  const user = messageByRole(record, 'user');
  const assistant = messageByRole(record, 'assistant');

  const prefix = [
    tokenizer.specialId(SYSTEM_MARK),
    ...tokenizer.encodeText(`\n${system}\n`),
    tokenizer.specialId(USER_MARK),
    ...tokenizer.encodeText(`\n${user}\n`),
    tokenizer.specialId(ASSISTANT_MARK),
    ...tokenizer.encodeText('\n'),
  ];
  const answerIds = tokenizer.encodeText(assistant);
  const inputIds = [...prefix, ...answerIds, tokenizer.specialId(EOS)];

  const labels = inputIds.map((id, position) => (position < prefix.length ? IGNORE_INDEX : id));

  const unmasked = labels.filter((label) => label >= 0);
  const decoded = tokenizer.decode(unmasked);
  if (decoded !== assistant) {
    throw new SpanMismatchError(
      `unmasked labels decode to ${JSON.stringify(decoded.slice(0, 40))}..., expected the assistant text`,
    );
  }
  // The assistant text is a label line followed by the answer body; the
  // span must select exactly that body in the decoded unmasked text.
  const labelBreak = assistant.indexOf('\n');
  const expectedBody = labelBreak >= 0 ? assistant.slice(labelBreak + 1) : assistant;
  const [start, end] = record.answer_span;
  if (decoded.slice(start, end) !== expectedBody) {
    throw new SpanMismatchError(`answer span [${start}, ${end}] does not select the answer body`);
  }
  // Character tokens map one-to-one, so the span length is the token count.
  const answerTokenCount = end - start;
  if (answerTokenCount <= 0) {
    throw new SpanMismatchError('answer span selects no tokens');
  }
  return { inputIds, labels, answerTokenCount };
}

export interface MaskAudit {
  index: number;
  instanceId: string;
  sequenceLength: number;
  maskedPrefix: number;
  unmaskedSuffix: number;
  answerTokenCount: number;
}

export function auditInstance(index: number, record: CorpusRecord, instance: TokenizedInstance): MaskAudit {
  const firstUnmasked = instance.labels.findIndex((label) => label >= 0);
  for (let i = 0; i < firstUnmasked; i += 1) {
    if (instance.labels[i]! >= 0) throw new SpanMismatchError('masked prefix is not contiguous');
  }
  return {
    index,
    instanceId: String(record.meta['instance_id'] ?? index),
    sequenceLength: instance.inputIds.length,
    maskedPrefix: firstUnmasked,
    unmaskedSuffix: instance.labels.length - firstUnmasked,
    answerTokenCount: instance.answerTokenCount,
  };
}
