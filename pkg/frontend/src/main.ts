/**
 * Browser entry point: wires the editor state machine to the DOM.
 *
 * Layout: clip player beside the subtitle text, gloss input below with
 * live diagnostics / token chips, a status line, and a conflict prompt.
 * The service base URL comes from the `data-service` attribute on the
 * mount node (defaults to same-origin).
 */

import { ServiceClient, TaskFilter, TransportError } from "./api.js"
import { AnnotationEditor } from "./editor.js"
import { resolveShortcut, seekStepSeconds } from "./keyboard.js"

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className: string
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag)
  node.className = className
  return node
}

function isTypingTarget(target: EventTarget | null): boolean {
  if (!(target instanceof HTMLElement)) return false
  return (
    target.tagName === "INPUT" ||
    target.tagName === "TEXTAREA" ||
    target.isContentEditable
  )
}

export function mountAnnotationUi(root: HTMLElement): AnnotationEditor {
  const baseUrl = root.dataset.service ?? ""
  const client = new ServiceClient(baseUrl, (url, init) =>
    fetch(url, init).catch((error) => {
      throw new TransportError(error)
    })
  )
  const editor = new AnnotationEditor(client)
  const filter: TaskFilter = {}

  const header = el("div", "task-header")
  const video = el("video", "clip")
  video.loop = true
  video.autoplay = true
  video.muted = true
  const subtitle = el("div", "subtitle-text")
  const input = el("textarea", "gloss-input")
  input.rows = 2
  input.placeholder = "gloss annotation — e.g. A+B C(?) D(2) E(=F=G)"
  const feedback = el("div", "feedback")
  const status = el("div", "status-line")
  const conflictBox = el("div", "conflict-box")
  const controls = el("div", "controls")
  const saveButton = el("button", "save")
  saveButton.textContent = "save draft (ctrl+enter)"
  const doneButton = el("button", "done")
  doneButton.textContent = "save done (ctrl+shift+enter)"
  const prevButton = el("button", "previous")
  prevButton.textContent = "previous (ctrl+←)"
  const nextButton = el("button", "next")
  nextButton.textContent = "next (ctrl+→)"
  controls.append(prevButton, saveButton, doneButton, nextButton)
  root.append(header, video, subtitle, input, feedback, conflictBox, status, controls)

  function renderFeedback(): void {
    feedback.textContent = ""
    if (editor.diagnostics.length > 0) {
      for (const d of editor.diagnostics) {
        const row = el("div", "diagnostic")
        row.textContent = `at ${d.position}: ${d.message}`
        feedback.append(row)
      }
      // Underline the first offending offset inside the input.
      const first = editor.diagnostics[0]
      if (first) input.setSelectionRange(first.position, first.position + 1)
      return
    }
    for (const chip of editor.tokens) {
      const node = el("span", `chip chip-${chip.kind}`)
      node.textContent =
        chip.kind === "homosign"
          ? `${chip.render} [${chip.members.length} signs]`
          : chip.render
      if (chip.kind === "compound" && chip.variant) node.classList.add("chip-variant")
      if (chip.kind === "compound" && chip.ill_performed)
        node.classList.add("chip-ill")
      feedback.append(node)
    }
  }

  function render(): void {
    if (editor.endOfQueue) {
      header.textContent = "queue empty — all tasks annotated"
      subtitle.textContent = ""
      input.disabled = true
      status.textContent = ""
      conflictBox.textContent = ""
      return
    }
    const task = editor.task
    if (!task) return
    input.disabled = false
    header.textContent = `${task.sample_id} · ${task.episode_id} · signer ${task.signer_id} · v${task.version} · ${task.status}`
    subtitle.textContent = task.subtitle_text
    if (video.src !== client.mediaUrl(task.sample_id)) {
      video.src = client.mediaUrl(task.sample_id)
    }
    if (input.value !== editor.buffer) input.value = editor.buffer
    renderFeedback()
    const flags = [
      editor.dirty ? "unsaved changes" : "saved",
      editor.offline ? "OFFLINE — edits kept locally" : "",
    ].filter(Boolean)
    status.textContent = flags.join(" · ")
    conflictBox.textContent = ""
    if (editor.conflict) {
      const note = el("div", "conflict-note")
      note.textContent = `another annotator saved v${editor.conflict.currentVersion}: "${editor.conflict.storedAnnotation ?? ""}"`
      const adopt = el("button", "adopt-theirs")
      adopt.textContent = "take theirs"
      adopt.onclick = () => {
        editor.adoptStoredAnnotation()
        render()
      }
      const retry = el("button", "keep-mine")
      retry.textContent = "keep mine"
      retry.onclick = () => void editor.retryKeepingMine(false).then(render)
      conflictBox.append(note, adopt, retry)
    }
  }

  async function act(action: ReturnType<typeof resolveShortcut>): Promise<void> {
    switch (action) {
      case "togglePlay":
        editor.togglePlay()
        if (video.paused) void video.play()
        else video.pause()
        break
      case "seekBackward":
        editor.seek(-seekStepSeconds)
        video.currentTime = editor.playbackPosition
        break
      case "seekForward":
        editor.seek(seekStepSeconds)
        video.currentTime = editor.playbackPosition
        break
      case "save":
        await editor.save(false)
        break
      case "saveDone":
        await editor.save(true)
        break
      case "next":
        await editor.loadNext(filter)
        break
      case "previous":
        await editor.loadPrevious(filter)
        break
      default:
        return
    }
    render()
  }

  input.addEventListener("input", () => {
    editor.setBuffer(input.value)
    render()
    // Re-render once the debounced validation lands.
    setTimeout(render, 400)
  })
  video.addEventListener("loadedmetadata", () => {
    if (Number.isFinite(video.duration)) editor.setClipDuration(video.duration)
  })
  video.addEventListener("timeupdate", () => {
    editor.playbackPosition = video.currentTime
  })
  window.addEventListener("keydown", (event) => {
    const action = resolveShortcut(event, isTypingTarget(event.target))
    if (action) {
      event.preventDefault()
      void act(action)
    }
  })
  saveButton.onclick = () => void act("save")
  doneButton.onclick = () => void act("saveDone")
  nextButton.onclick = () => void act("next")
  prevButton.onclick = () => void act("previous")

  void editor.loadNext(filter).then(render)
  return editor
}

const mount = document.getElementById("annotation-ui")
if (mount) mountAnnotationUi(mount)
