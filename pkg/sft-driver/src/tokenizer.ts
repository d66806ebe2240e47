/**
 * Character-level tokenizer with role-marker special tokens.
 *
 * One id per distinct character keeps the character-span to token-mask
 * conversion exact: token position k of a text is character k. Special
 * tokens occupy ids below the character range and never collide with
 * text content.
 */

export const PAD = '<|pad|>';
export const SYSTEM_MARK = '<|system|>';
export const USER_MARK = '<|user|>';
export const ASSISTANT_MARK = '<|assistant|>';
export const EOS = '<|eos|>';

export const SPECIAL_TOKENS = [PAD, SYSTEM_MARK, USER_MARK, ASSISTANT_MARK, EOS] as const;

export class CharTokenizer {
  private readonly charToId = new Map<string, number>();
  private readonly idToChar: string[] = [];

  constructor(texts: Iterable<string>) {
    for (const special of SPECIAL_TOKENS) {
      this.charToId.set(special, this.idToChar.length);
      this.idToChar.push(special);
    }
    const chars = new Set<string>();
    for (const text of texts) {
      for (const ch of text) chars.add(ch);
    }
    for (const ch of [...chars].sort()) {
      this.charToId.set(ch, this.idToChar.length);
      this.idToChar.push(ch);
    }
  }

  get vocabSize(): number {
    return this.idToChar.length;
  }

  specialId(token: string): number {
    const id = this.charToId.get(token);
    if (id === undefined) throw new Error(`unknown special token ${token}`);
    return id;
  }

  encodeText(text: string): number[] {
    return [...text].map((ch) => {
      const id = this.charToId.get(ch);
      if (id === undefined) throw new Error(`character ${JSON.stringify(ch)} not in vocabulary`);
      return id;
    });
  }

  /** Decode ids back to text; special tokens are skipped. */
  decode(ids: Iterable<number>): string {
    let out = '';
    for (const id of ids) {
      const token = this.idToChar[id];
      if (token === undefined) throw new Error(`id ${id} outside vocabulary`);
      if ((SPECIAL_TOKENS as readonly string[]).includes(token)) continue;
      out += token;
    }
    return out;
  }
}
