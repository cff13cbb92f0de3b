/**
 * Pure DOM rendering for a session view: three cursor-centered stream
 * columns plus a status line. No state of its own; every call repaints
 * from the latest server-acknowledged session state.
 */

import type { LanguageCode, SessionState, StreamWindow } from "./api.js";

export interface StreamSpec {
  code: LanguageCode;
  label: string;
}

export const STREAMS: readonly StreamSpec[] = [
  { code: "bam", label: "Bambara" },
  { code: "fr", label: "French" },
  { code: "en", label: "English" },
];

export function renderStream(
  list: HTMLElement,
  position: HTMLElement,
  window: StreamWindow,
): void {
  list.textContent = "";
  const doc = list.ownerDocument;
  for (const item of window.items) {
    const li = doc.createElement("li");
    li.textContent = item.text;
    li.dataset.index = String(item.index);
    if (item.index === window.cursor) {
      li.classList.add("current");
    }
    list.appendChild(li);
  }
  if (window.cursor >= window.total) {
    const li = doc.createElement("li");
    li.textContent = "(end of stream)";
    li.classList.add("current", "end");
    list.appendChild(li);
  }
  position.textContent =
    window.cursor < window.total
      ? `${window.cursor + 1} / ${window.total}`
      : `end / ${window.total}`;
}

export function renderStatus(
  alignedEl: HTMLElement,
  savedEl: HTMLElement,
  versionEl: HTMLElement,
  state: SessionState,
): void {
  alignedEl.textContent = `aligned ${state.aligned_count}`;
  if (state.saved_count === 0 && state.output_path === null) {
    savedEl.textContent = "not saved yet";
  } else {
    savedEl.textContent = `saved ${state.saved_count}/${state.aligned_count}`;
  }
  versionEl.textContent = `v${state.version}`;
}
