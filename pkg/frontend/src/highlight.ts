// Entity highlighting built from text nodes, so question text is never
// interpreted as markup and never rewritten.

import type { EntityRef } from "./api.js";

interface Span {
  start: number;
  end: number;
}

export function entitySpans(text: string, entities: EntityRef[]): Span[] {
  const lowered = text.toLowerCase();
  const surfaces = [...new Set(entities.map((e) => e.surface.toLowerCase()).filter(Boolean))];
  surfaces.sort((a, b) => b.length - a.length || a.localeCompare(b));
  const claimed: Span[] = [];
  for (const surface of surfaces) {
    let from = 0;
    for (;;) {
      const i = lowered.indexOf(surface, from);
      if (i < 0) break;
      const candidate = { start: i, end: i + surface.length };
      if (!claimed.some((s) => s.start < candidate.end && s.end > candidate.start)) {
        claimed.push(candidate);
      }
      from = i + 1;
    }
  }
  return claimed.sort((a, b) => a.start - b.start);
}

export function renderHighlighted(text: string, entities: EntityRef[]): DocumentFragment {
  const fragment = document.createDocumentFragment();
  let cursor = 0;
  for (const span of entitySpans(text, entities)) {
    if (span.start > cursor) {
      fragment.append(document.createTextNode(text.slice(cursor, span.start)));
    }
    const mark = document.createElement("mark");
    mark.textContent = text.slice(span.start, span.end);
    fragment.append(mark);
    cursor = span.end;
  }
  if (cursor < text.length) {
    fragment.append(document.createTextNode(text.slice(cursor)));
  }
  return fragment;
}
