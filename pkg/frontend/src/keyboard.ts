/**
 * Keyboard-only operation: play/pause, seek, save, next/previous.
 *
 * Annotators type inside the gloss input most of the time, so every action
 * has a modifier form that works while typing; bare keys are only honored
 * when focus is outside an editable element.
 */

export type EditorAction =
  | "togglePlay"
  | "seekBackward"
  | "seekForward"
  | "save"
  | "saveDone"
  | "next"
  | "previous"

export interface KeyboardEventLike {
  key: string
  code: string
  ctrlKey: boolean
  metaKey: boolean
  altKey: boolean
  shiftKey: boolean
}

const SEEK_STEP_S = 0.5

export const seekStepSeconds = SEEK_STEP_S

export function resolveShortcut(
  event: KeyboardEventLike,
  isTyping: boolean
): EditorAction | null {
  const primary = event.ctrlKey || event.metaKey
  if (primary && !event.altKey) {
    if (event.key === "Enter") return event.shiftKey ? "saveDone" : "save"
    if (event.code === "ArrowRight") return "next"
    if (event.code === "ArrowLeft") return "previous"
    if (event.code === "Space") return "togglePlay"
    return null
  }
  if (isTyping || event.altKey) return null
  switch (event.code) {
    case "Space":
      return "togglePlay"
    case "ArrowLeft":
      return "seekBackward"
    case "ArrowRight":
      return "seekForward"
    case "KeyS":
      return event.shiftKey ? "saveDone" : "save"
    case "KeyN":
      return "next"
    case "KeyP":
      return "previous"
    default:
      return null
  }
}
