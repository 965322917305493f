/**
 * Clip playback position math. Clips are short (3-15 s) and annotators
 * re-watch them repeatedly, so playback loops by default.
 */

export const DEFAULT_FPS = 25

/** Wall-clock estimate of a clip's length from its frame span. */
export function clipDurationSeconds(
  startFrame: number,
  endFrame: number,
  fps: number = DEFAULT_FPS
): number {
  if (fps <= 0 || endFrame <= startFrame) return 0
  return (endFrame - startFrame) / fps
}

/** Advance a playback position, wrapping at the clip end when looping. */
export function advancePosition(
  position: number,
  dt: number,
  duration: number,
  loop: boolean = true
): number {
  if (duration <= 0) return 0
  const next = position + dt
  if (next < duration) return Math.max(next, 0)
  return loop ? next % duration : duration
}
