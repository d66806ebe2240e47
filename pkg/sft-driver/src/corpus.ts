/**
 * The chat-corpus JSONL schema emitted by the cdharness generator:
 * one record per line with system/user/assistant messages, the character
 * span of the answer body inside the assistant text, and open metadata.
 */

import { readFileSync } from 'node:fs';

export type Role = 'system' | 'user' | 'assistant';

export interface ChatMessage {
  role: Role;
  content: string;
}

export interface CorpusRecord {
  messages: ChatMessage[];
  answer_span: [number, number];
  meta: Record<string, unknown>;
}

export function parseRecord(line: string): CorpusRecord {
  const raw = JSON.parse(line) as CorpusRecord;
  const roles = raw.messages.map((m) => m.role);
  if (roles.join(',') !== 'system,user,assistant') {
    throw new Error(`record must hold [system, user, assistant], got [${roles.join(', ')}]`);
  }
  const [start, end] = raw.answer_span;
  const assistant = raw.messages[2]!.content;
  if (start < 0 || end > assistant.length || start > end) {
    throw new Error(`answer_span [${start}, ${end}] outside assistant text of length ${assistant.length}`);
  }
  return raw;
}

export function readCorpus(path: string): CorpusRecord[] {
  const text = readFileSync(path, 'utf-8');
  return text
    .split('\n')
    .filter((line) => line.trim().length > 0)
    .map(parseRecord);
}

export function messageByRole(record: CorpusRecord, role: Role): string {
  const found = record.messages.find((m) => m.role === role);
  if (!found) throw new Error(`record has no ${role} message`);
  return found.content;
}
