/**
 * Editor state machine for the annotation workflow.
 *
 * One instance drives the whole screen: the current task, the gloss input
 * buffer with debounced server-side validation, playback position for the
 * looping clip, and versioned saves with explicit conflict handling.
 *
 * Invariants maintained here:
 *   - dirty is true iff the buffer differs from the last accepted annotation;
 *   - diagnostics/tokens always describe the current buffer once the
 *     debounce settles (a sequence guard drops out-of-order responses);
 *   - no save request is issued while diagnostics are non-empty or the
 *     buffer is empty;
 *   - a version conflict never touches the local buffer.
 */

import {
  AnnotationTask,
  Diagnostic,
  PutResult,
  ServiceClient,
  TaskFilter,
  TokenChip,
  TransportError,
} from "./api.js"
import { advancePosition, clipDurationSeconds } from "./playback.js"

export type SaveOutcome =
  | PutResult
  | { kind: "blocked"; reason: "no-task" | "empty" | "diagnostics" }
  | { kind: "offline" }

const DEFAULT_DEBOUNCE_MS = 300

function taskOrder(task: AnnotationTask): [string, number, string] {
  return [task.episode_id, task.start_frame, task.sample_id]
}

function isAfter(a: AnnotationTask, b: AnnotationTask): boolean {
  const [ae, af, ai] = taskOrder(a)
  const [be, bf, bi] = taskOrder(b)
  if (ae !== be) return ae > be
  if (af !== bf) return af > bf
  return ai > bi
}

export class AnnotationEditor {
  task: AnnotationTask | null = null
  buffer = ""
  diagnostics: Diagnostic[] = []
  tokens: TokenChip[] = []
  dirty = false
  endOfQueue = false
  offline = false
  conflict: { currentVersion: number; storedAnnotation: string | null } | null =
    null

  playing = false
  playbackPosition = 0
  loopPlayback = true
  private clipDuration = 0

  private lastAccepted = ""
  private validatedBuffer: string | null = null
  private validationSeq = 0
  private debounceTimer: ReturnType<typeof setTimeout> | null = null
  private readonly debounceMs: number

  constructor(
    private readonly client: ServiceClient,
    options: { debounceMs?: number } = {}
  ) {
    this.debounceMs = options.debounceMs ?? DEFAULT_DEBOUNCE_MS
  }

  // -- queue ----------------------------------------------------------------

  /** Load the next task in service order (episode, then start frame). */
  async loadNext(filter: TaskFilter = {}): Promise<void> {
    await this.loadAdjacent(filter, "next")
  }

  async loadPrevious(filter: TaskFilter = {}): Promise<void> {
    await this.loadAdjacent(filter, "previous")
  }

  private async loadAdjacent(
    filter: TaskFilter,
    direction: "next" | "previous"
  ): Promise<void> {
    let tasks: AnnotationTask[]
    try {
      tasks = await this.client.listTasks(filter)
    } catch (error) {
      if (error instanceof TransportError) {
        this.offline = true
        return
      }
      throw error
    }
    this.offline = false
    let candidates = tasks
    if (this.task !== null) {
      const current = this.task
      candidates =
        direction === "next"
          ? tasks.filter((t) => isAfter(t, current))
          : tasks.filter((t) => isAfter(current, t))
    }
    if (candidates.length === 0) {
      if (direction === "next") {
        this.task = null
        this.endOfQueue = true
        this.resetForTask(null)
      }
      return
    }
    const index = direction === "next" ? 0 : candidates.length - 1
    this.endOfQueue = false
    this.resetForTask(candidates[index] ?? null)
  }

  private resetForTask(task: AnnotationTask | null): void {
    this.cancelPendingValidation()
    this.task = task
    this.lastAccepted = task?.raw_annotation ?? ""
    this.buffer = this.lastAccepted
    this.dirty = false
    this.diagnostics = []
    this.tokens = []
    this.validatedBuffer = this.buffer === "" ? "" : null
    this.conflict = null
    this.playbackPosition = 0
    this.playing = task !== null
    this.clipDuration = task
      ? clipDurationSeconds(task.start_frame, task.end_frame)
      : 0
    if (task && this.buffer !== "") void this.validateNow()
  }

  // -- live validation --------------------------------------------------------

  /** Update the buffer from the input; validation fires after the debounce. */
  setBuffer(text: string): void {
    this.buffer = text
    this.dirty = text !== this.lastAccepted
    this.cancelPendingValidation()
    if (text === "") {
      // An empty buffer is "nothing entered yet", not an error to underline.
      this.diagnostics = []
      this.tokens = []
      this.validatedBuffer = ""
      return
    }
    this.debounceTimer = setTimeout(() => {
      this.debounceTimer = null
      void this.validateNow()
    }, this.debounceMs)
  }

  /** Validate the buffer immediately; stale responses are dropped. */
  async validateNow(): Promise<void> {
    const raw = this.buffer
    const seq = ++this.validationSeq
    let result
    try {
      result = await this.client.validate(raw)
    } catch (error) {
      if (error instanceof TransportError) {
        if (seq === this.validationSeq) this.offline = true
        return
      }
      throw error
    }
    if (seq !== this.validationSeq) return // a newer buffer was validated
    this.offline = false
    this.validatedBuffer = raw
    if (result.ok) {
      this.diagnostics = []
      this.tokens = result.tokens
    } else {
      this.diagnostics = result.diagnostics
      this.tokens = []
    }
  }

  private cancelPendingValidation(): void {
    if (this.debounceTimer !== null) {
      clearTimeout(this.debounceTimer)
      this.debounceTimer = null
    }
  }

  // -- saving -----------------------------------------------------------------

  /**
   * Submit the buffer at the task's expected version. Refuses locally when
   * there is no task, the buffer is empty, or diagnostics are present.
   */
  async save(done: boolean): Promise<SaveOutcome> {
    if (this.task === null) return { kind: "blocked", reason: "no-task" }
    if (this.buffer === "") return { kind: "blocked", reason: "empty" }
    this.cancelPendingValidation()
    if (this.validatedBuffer !== this.buffer) await this.validateNow()
    if (this.offline) return { kind: "offline" }
    if (this.diagnostics.length > 0)
      return { kind: "blocked", reason: "diagnostics" }

    let result: PutResult
    try {
      result = await this.client.putAnnotation(
        this.task.sample_id,
        this.buffer,
        this.task.version,
        done
      )
    } catch (error) {
      if (error instanceof TransportError) {
        this.offline = true
        return { kind: "offline" }
      }
      throw error
    }
    switch (result.kind) {
      case "ok":
        this.task.version = result.version
        this.task.status = result.status
        this.task.raw_annotation = this.buffer
        this.lastAccepted = this.buffer
        this.dirty = false
        this.conflict = null
        break
      case "conflict":
        // Another writer got there first: surface their annotation, keep
        // the local buffer untouched for a manual merge.
        this.conflict = {
          currentVersion: result.currentVersion,
          storedAnnotation: result.storedAnnotation,
        }
        break
      case "invalid":
        this.diagnostics = result.diagnostics
        this.tokens = []
        this.validatedBuffer = this.buffer
        break
      default:
        break
    }
    return result
  }

  /** Resolve a conflict by taking the other writer's annotation. */
  adoptStoredAnnotation(): void {
    if (this.conflict === null || this.task === null) return
    this.task.version = this.conflict.currentVersion
    this.lastAccepted = this.conflict.storedAnnotation ?? ""
    this.task.raw_annotation = this.conflict.storedAnnotation
    this.conflict = null
    this.setBuffer(this.lastAccepted)
    this.dirty = false
  }

  /** Resolve a conflict by re-submitting the local buffer at the new version. */
  async retryKeepingMine(done: boolean): Promise<SaveOutcome> {
    if (this.conflict === null || this.task === null)
      return { kind: "blocked", reason: "no-task" }
    this.task.version = this.conflict.currentVersion
    this.conflict = null
    return this.save(done)
  }

  // -- playback -----------------------------------------------------------------

  /** Real duration from the media element, once known (frames are an estimate). */
  setClipDuration(seconds: number): void {
    this.clipDuration = seconds
  }

  togglePlay(): void {
    this.playing = !this.playing
  }

  seek(deltaSeconds: number): void {
    this.playbackPosition = advancePosition(
      this.playbackPosition,
      deltaSeconds,
      this.clipDuration,
      this.loopPlayback
    )
  }

  /** Advance playback by dt seconds; loops at the clip end by default. */
  tick(dt: number): void {
    if (!this.playing) return
    this.playbackPosition = advancePosition(
      this.playbackPosition,
      dt,
      this.clipDuration,
      this.loopPlayback
    )
  }
}
