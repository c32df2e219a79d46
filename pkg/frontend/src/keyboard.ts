/** Keyboard shortcuts for queue review.
 *
 * Keys are ignored while a form control has focus, so typing a supervisor
 * name never fires a verdict.
 */

export interface KeyHandlers {
  next(): void;
  previous(): void;
  approve(): void;
  reject(): void;
  refresh(): void;
  iterate(): void;
}

const FORM_TAGS = new Set(["INPUT", "SELECT", "TEXTAREA", "BUTTON"]);

export function isFormTarget(target: EventTarget | null): boolean {
  return target instanceof Element && FORM_TAGS.has(target.tagName);
}

export function bindKeyboard(target: Document, handlers: KeyHandlers): () => void {
  const onKey = (event: KeyboardEvent) => {
    if (event.defaultPrevented || event.altKey || event.ctrlKey || event.metaKey) return;
    if (isFormTarget(event.target)) return;
    switch (event.key) {
      case "j":
      case "ArrowDown":
        handlers.next();
        break;
      case "k":
      case "ArrowUp":
        handlers.previous();
        break;
      case "a":
        handlers.approve();
        break;
      case "r":
        handlers.reject();
        break;
      case "u":
        handlers.refresh();
        break;
      case "i":
        handlers.iterate();
        break;
      default:
        return;
    }
    event.preventDefault();
  };
  target.addEventListener("keydown", onKey);
  return () => target.removeEventListener("keydown", onKey);
}
