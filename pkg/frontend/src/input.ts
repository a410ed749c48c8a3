/** Resolve what text a prompt run should take as input.
 *
 * A non-empty selection wins; otherwise the paragraph (blank-line-delimited
 * block) containing the caret. Returns null for an empty document.
 */

export interface ResolvedInput {
  text: string;
  start: number;
  end: number;
}

interface Block {
  start: number;
  end: number;
}

function paragraphBlocks(text: string): Block[] {
  const blocks: Block[] = [];
  let offset = 0;
  let blockStart: number | null = null;
  for (const line of text.split("\n")) {
    const blank = line.trim() === "";
    if (!blank && blockStart === null) {
      blockStart = offset;
    }
    if (blank && blockStart !== null) {
      blocks.push({ start: blockStart, end: offset - 1 });
      blockStart = null;
    }
    offset += line.length + 1;
  }
  if (blockStart !== null) {
    blocks.push({ start: blockStart, end: text.length });
  }
  return blocks;
}

export function paragraphAt(text: string, caret: number): ResolvedInput | null {
  const blocks = paragraphBlocks(text);
  if (blocks.length === 0) return null;
  let chosen = blocks[blocks.length - 1];
  for (const block of blocks) {
    if (caret <= block.end) {
      chosen = block;
      break;
    }
  }
  return { text: text.slice(chosen.start, chosen.end), start: chosen.start, end: chosen.end };
}

export function resolveInput(
  text: string,
  selectionStart: number,
  selectionEnd: number,
): ResolvedInput | null {
  if (text.trim() === "") return null;
  if (selectionEnd > selectionStart) {
    return {
      text: text.slice(selectionStart, selectionEnd),
      start: selectionStart,
      end: selectionEnd,
    };
  }
  return paragraphAt(text, selectionStart);
}
