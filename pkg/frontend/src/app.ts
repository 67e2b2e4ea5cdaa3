// DOM layer: a single-page task loop over the session state machine.
// One query-passage pair at a time, grade buttons from /config, a narrative
// editor per topic, a flag control, and the optional external-search link.

import { ApiClient } from './api'
import { attachGradeShortcuts } from './keyboard'
import { buildSearchLink } from './search'
import { AnnotationSession } from './session'
import type { Grade, ServiceConfig, TaskView } from './types'

const GRADE_ORDER: Grade[] = [3, 2, 1, 0]

export class App {
  private session: AnnotationSession
  private config: ServiceConfig | null = null
  private narrativeSeen = new Set<string>()
  private busy = false

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    session: AnnotationSession,
  ) {
    this.session = session
  }

  async run(): Promise<void> {
    this.config = await this.api.getConfig()
    attachGradeShortcuts(window, (grade) => {
      void this.judge(grade)
    })
    await this.session.start()
    await this.render()
  }

  private async judge(grade: Grade): Promise<void> {
    if (this.busy || this.session.current().kind !== 'task') return
    this.busy = true
    try {
      await this.session.judge(grade)
    } finally {
      this.busy = false
    }
    await this.render()
  }

  private async render(): Promise<void> {
    const state = this.session.current()
    if (state.kind === 'task') {
      await this.renderTask(state.task)
    } else if (state.kind === 'done') {
      this.renderDone(state.summary)
    } else if (state.kind === 'offline') {
      this.renderOffline(state.pendingCount)
    }
  }

  private async renderTask(task: TaskView): Promise<void> {
    const config = this.config as ServiceConfig
    const progress = this.session.progress()
    const searchLink = buildSearchLink(config.search_url_template, task.title)
    const judged = progress ? progress.judged : task.position - 1
    const total = progress ? progress.total : task.position + task.remaining - 1

    this.root.innerHTML = `
      <header>
        <h1>${escapeHtml(task.title)}</h1>
        <span class="progress">${judged} / ${total} judged · ${task.remaining} remaining</span>
        ${searchLink ? `<a class="search" href="${searchLink}" target="_blank" rel="noopener">search the web for this topic</a>` : ''}
      </header>
      <article class="passage">${escapeHtml(task.text)}</article>
      <section class="grades"></section>
      <section class="narrative">
        <h2>Topic narrative</h2>
        <textarea class="narrative-text" placeholder="Describe the information need behind this topic"></textarea>
        <button class="save-narrative" disabled>Save narrative</button>
        <span class="narrative-version"></span>
      </section>
      <section class="flag">
        <input class="flag-note" placeholder="Note an ambiguity about this passage" />
        <button class="flag-send" disabled>Flag</button>
      </section>
    `
    const grades = this.root.querySelector('.grades') as HTMLElement
    for (const grade of GRADE_ORDER) {
      const button = document.createElement('button')
      button.className = `grade grade-${grade}`
      button.innerHTML = `<strong>${grade} · ${escapeHtml(
        config.grade_labels[String(grade)] ?? String(grade),
      )}</strong><small>${escapeHtml(config.grade_guidelines[String(grade)] ?? '')}</small>`
      button.addEventListener('click', () => void this.judge(grade))
      grades.appendChild(button)
    }
    await this.wireNarrative(task.topic)
    this.wireFlag(task.topic, task.doc)
  }

  private async wireNarrative(topic: string): Promise<void> {
    const textarea = this.root.querySelector('.narrative-text') as HTMLTextAreaElement
    const save = this.root.querySelector('.save-narrative') as HTMLButtonElement
    const version = this.root.querySelector('.narrative-version') as HTMLElement
    const topics = await this.api.getTopics()
    const info = topics.find((t) => t.topic === topic)
    if (info?.narrative) {
      textarea.value = info.narrative
      version.textContent = 'saved'
    } else if (!this.narrativeSeen.has(topic)) {
      version.textContent = 'please write the narrative for this topic first'
    }
    this.narrativeSeen.add(topic)
    textarea.addEventListener('input', () => {
      save.disabled = textarea.value.trim().length === 0
    })
    save.addEventListener('click', () => {
      void (async () => {
        if (textarea.value.trim().length === 0) return
        const ack = await this.api.submitNarrative(topic, textarea.value)
        version.textContent = `saved (version ${ack.version})`
      })()
    })
  }

  private wireFlag(topic: string, doc: string): void {
    const note = this.root.querySelector('.flag-note') as HTMLInputElement
    const send = this.root.querySelector('.flag-send') as HTMLButtonElement
    note.addEventListener('input', () => {
      send.disabled = note.value.trim().length === 0
    })
    send.addEventListener('click', () => {
      void (async () => {
        if (note.value.trim().length === 0) return
        await this.api.submitFlag(topic, note.value, doc)
        note.value = ''
        send.disabled = true
      })()
    })
  }

  private renderDone(summary: Record<string, { total: number; judged: number }>): void {
    const rows = Object.entries(summary)
      .map(
        ([topic, counts]) =>
          `<li>${escapeHtml(topic)}: ${counts.judged} of ${counts.total} judged</li>`,
      )
      .join('')
    this.root.innerHTML = `
      <h1>All tasks complete</h1>
      <ul class="summary">${rows}</ul>
    `
  }

  private renderOffline(pendingCount: number): void {
    this.root.innerHTML = `
      <div class="banner offline">
        Service unreachable. ${pendingCount} judgment(s) are queued locally and
        will not be lost.
        <button class="retry">Retry now</button>
      </div>
    `
    const retry = this.root.querySelector('.retry') as HTMLButtonElement
    retry.addEventListener('click', () => {
      void this.session.retryPending().then(() => this.render())
    })
  }
}

function escapeHtml(text: string): string {
  return text
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
    .replaceAll('"', '&quot;')
}
