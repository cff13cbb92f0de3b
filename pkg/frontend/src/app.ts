/**
 * Aligner application: wires the control surface to the session API.
 *
 * One mutation in flight at a time; every control is disabled while a
 * request is pending. A 409 (someone else moved the session) refreshes
 * the view and shows a non-blocking warning; a 400 surfaces the server's
 * diagnostic without touching the rendered state.
 */

import {
  ApiError,
  type AlignClient,
  type Direction,
  type LanguageCode,
  type SessionState,
  type UnitKind,
} from "./api.js";
import { KEY_BINDINGS, matchKey, type ActionId } from "./keyboard.js";
import { renderStatus, renderStream, STREAMS } from "./view.js";

function streamSection(code: LanguageCode, label: string): string {
  return `
    <section class="stream" id="stream-${code}">
      <h2>${label} <span class="position" id="pos-${code}"></span></h2>
      <ol class="items" id="items-${code}"></ol>
      <div class="nav">
        <button type="button" class="control" id="${code}-prev" title="${label} previous">&lt;</button>
        <button type="button" class="control" id="${code}-next" title="${label} next">&gt;</button>
      </div>
    </section>`;
}

export const TEMPLATE = `
  <header class="topbar">
    <form id="open-form">
      <input id="session-input" placeholder="session id" autocomplete="off">
      <button type="submit" id="open-btn">Open</button>
    </form>
    <div class="status">
      <span id="status-aligned"></span>
      <span id="status-saved"></span>
      <span id="status-version"></span>
    </div>
    <button type="button" id="help-btn" title="keyboard bindings">?</button>
  </header>
  <div id="warning" class="warning" hidden></div>
  <main class="streams">
    ${STREAMS.map((s) => streamSection(s.code, s.label)).join("\n")}
  </main>
  <footer class="controls">
    <button type="button" class="control" id="all-prev">&lt;&lt;&lt;</button>
    <button type="button" class="control" id="all-next">&gt;&gt;&gt;</button>
    <button type="button" class="control" id="align-bfe">Aligned B-F-E</button>
    <button type="button" class="control" id="align-bf">Aligned B-F</button>
    <button type="button" class="control" id="align-be">Aligned B-E</button>
    <button type="button" class="control" id="save">Save</button>
    <button type="button" class="control" id="continue-save">Continue Saving</button>
  </footer>
  <div id="help" class="help" hidden>
    <h3>Keyboard bindings</h3>
    <table id="bindings"><tbody></tbody></table>
  </div>`;

const MUTATING_ACTIONS: Record<
  Exclude<ActionId, "help">,
  { language?: LanguageCode | "all"; direction?: Direction; kind?: UnitKind }
> = {
  "bam-prev": { language: "bam", direction: "prev" },
  "bam-next": { language: "bam", direction: "next" },
  "fr-prev": { language: "fr", direction: "prev" },
  "fr-next": { language: "fr", direction: "next" },
  "en-prev": { language: "en", direction: "prev" },
  "en-next": { language: "en", direction: "next" },
  "all-prev": { language: "all", direction: "prev" },
  "all-next": { language: "all", direction: "next" },
  "align-bfe": { kind: "BFE" },
  "align-bf": { kind: "BF" },
  "align-be": { kind: "BE" },
  save: {},
  "continue-save": {},
};

export class AlignerApp {
  state: SessionState | null = null;
  private pending = false;
  private idleWaiters: Array<() => void> = [];
  private readonly onKeydown: (evt: KeyboardEvent) => void;

  constructor(
    readonly root: HTMLElement,
    readonly api: AlignClient,
  ) {
    root.innerHTML = TEMPLATE;
    this.renderBindingsTable();
    for (const action of Object.keys(MUTATING_ACTIONS) as ActionId[]) {
      this.element(action).addEventListener("click", () => {
        void this.handleAction(action);
      });
    }
    this.element("help-btn").addEventListener("click", () => this.toggleHelp());
    this.element("open-form").addEventListener("submit", (evt) => {
      evt.preventDefault();
      const input = this.element("session-input") as HTMLInputElement;
      if (input.value.trim()) {
        void this.open(input.value.trim());
      }
    });
    this.onKeydown = (evt) => {
      const action = matchKey(evt);
      if (action !== null) {
        evt.preventDefault();
        void this.handleAction(action);
      }
    };
    this.root.ownerDocument.addEventListener("keydown", this.onKeydown);
    this.render();
  }

  dispose(): void {
    this.root.ownerDocument.removeEventListener("keydown", this.onKeydown);
  }

  /** Resolves once no mutation is in flight. */
  whenIdle(): Promise<void> {
    if (!this.pending) {
      return Promise.resolve();
    }
    return new Promise((resolve) => this.idleWaiters.push(resolve));
  }

  async open(sessionId: string): Promise<void> {
    try {
      this.state = await this.api.getSession(sessionId);
      this.clearWarning();
    } catch (err) {
      this.warn(err instanceof Error ? err.message : String(err));
    }
    this.render();
  }

  async handleAction(action: ActionId): Promise<void> {
    if (action === "help") {
      this.toggleHelp();
      return;
    }
    if (this.pending || this.state === null) {
      return;
    }
    const spec = MUTATING_ACTIONS[action];
    const { id, version } = this.state;
    this.setPending(true);
    try {
      let next: SessionState;
      if (spec.kind !== undefined) {
        next = await this.api.align(id, version, spec.kind);
      } else if (spec.language !== undefined && spec.direction !== undefined) {
        next = await this.api.advance(id, version, spec.language, spec.direction);
      } else if (action === "save") {
        next = await this.api.save(id, version);
      } else {
        next = await this.api.continueSave(id, version);
      }
      this.state = next;
      this.clearWarning();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.state = await this.api.getSession(id);
        this.warn("session changed elsewhere; view refreshed");
      } else if (err instanceof ApiError) {
        this.warn(err.message);
      } else {
        this.warn(err instanceof Error ? err.message : String(err));
      }
    } finally {
      this.setPending(false);
      this.render();
    }
  }

  render(): void {
    const haveSession = this.state !== null;
    for (const button of this.controlButtons()) {
      button.disabled = this.pending || !haveSession;
    }
    if (this.state === null) {
      return;
    }
    for (const { code } of STREAMS) {
      renderStream(
        this.element(`items-${code}`),
        this.element(`pos-${code}`),
        this.state.window[code],
      );
    }
    renderStatus(
      this.element("status-aligned"),
      this.element("status-saved"),
      this.element("status-version"),
      this.state,
    );
  }

  warningText(): string | null {
    const warning = this.element("warning");
    return warning.hidden ? null : warning.textContent;
  }

  private element(id: string): HTMLElement {
    const found = this.root.querySelector<HTMLElement>(`#${id}`);
    if (found === null) {
      throw new Error(`missing element #${id}`);
    }
    return found;
  }

  private controlButtons(): HTMLButtonElement[] {
    return Array.from(this.root.querySelectorAll<HTMLButtonElement>("button.control"));
  }

  private setPending(pending: boolean): void {
    this.pending = pending;
    for (const button of this.controlButtons()) {
      button.disabled = pending || this.state === null;
    }
    if (!pending) {
      const waiters = this.idleWaiters;
      this.idleWaiters = [];
      for (const resolve of waiters) {
        resolve();
      }
    }
  }

  private warn(message: string): void {
    const warning = this.element("warning");
    warning.textContent = message;
    warning.hidden = false;
  }

  private clearWarning(): void {
    const warning = this.element("warning");
    warning.textContent = "";
    warning.hidden = true;
  }

  private toggleHelp(): void {
    const help = this.element("help");
    help.hidden = !help.hidden;
  }

  private renderBindingsTable(): void {
    const tbody = this.element("bindings").querySelector("tbody")!;
    const doc = this.root.ownerDocument;
    for (const binding of KEY_BINDINGS) {
      const row = doc.createElement("tr");
      const keyCell = doc.createElement("td");
      keyCell.textContent = binding.key;
      const descCell = doc.createElement("td");
      descCell.textContent = binding.description;
      row.append(keyCell, descCell);
      tbody.appendChild(row);
    }
  }
}
