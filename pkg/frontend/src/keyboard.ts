/**
 * Keyboard bindings: every button action is reachable from the keyboard.
 *
 * Single-letter keys match case-insensitively; named keys (ArrowLeft...)
 * match exactly. Events with alt/ctrl/meta held, or targeted at a text
 * input, never match, so typing a session id cannot move cursors.
 */

export type ActionId =
  | "bam-prev"
  | "bam-next"
  | "fr-prev"
  | "fr-next"
  | "en-prev"
  | "en-next"
  | "all-prev"
  | "all-next"
  | "align-bfe"
  | "align-bf"
  | "align-be"
  | "save"
  | "continue-save"
  | "help";

export interface KeyBinding {
  key: string;
  action: ActionId;
  description: string;
}

export const KEY_BINDINGS: readonly KeyBinding[] = [
  { key: "q", action: "bam-prev", description: "Bambara previous sentence" },
  { key: "w", action: "bam-next", description: "Bambara next sentence" },
  { key: "a", action: "fr-prev", description: "French previous sentence" },
  { key: "s", action: "fr-next", description: "French next sentence" },
  { key: "z", action: "en-prev", description: "English previous sentence" },
  { key: "x", action: "en-next", description: "English next sentence" },
  { key: "ArrowLeft", action: "all-prev", description: "all streams previous" },
  { key: "ArrowRight", action: "all-next", description: "all streams next" },
  { key: "1", action: "align-bfe", description: "mark Aligned B-F-E" },
  { key: "2", action: "align-bf", description: "mark Aligned B-F" },
  { key: "3", action: "align-be", description: "mark Aligned B-E" },
  { key: "v", action: "save", description: "Save to a new file" },
  { key: "c", action: "continue-save", description: "Continue Saving" },
  { key: "?", action: "help", description: "toggle this help overlay" },
];

const TEXT_TARGETS = new Set(["INPUT", "TEXTAREA", "SELECT"]);

export function matchKey(evt: KeyboardEvent): ActionId | null {
  if (evt.altKey || evt.ctrlKey || evt.metaKey) {
    return null;
  }
  const target = evt.target;
  if (
    target instanceof HTMLElement &&
    (TEXT_TARGETS.has(target.tagName) || target.isContentEditable)
  ) {
    return null;
  }
  for (const binding of KEY_BINDINGS) {
    if (/^[a-z]$/i.test(binding.key)) {
      if (binding.key.toLowerCase() === evt.key.toLowerCase()) {
        return binding.action;
      }
    } else if (binding.key === evt.key) {
      return binding.action;
    }
  }
  return null;
}
