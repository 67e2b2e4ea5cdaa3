// Judge-flow state machine: fetch next task, submit the chosen grade through
// the pending queue, advance. DOM-free so the flow is testable end to end.

import type { ApiClient } from './api'
import { PendingQueue, type KeyValueStore } from './queue'
import type { DoneView, Grade, Progress, TaskView } from './types'

export type SessionState =
  | { kind: 'loading' }
  | { kind: 'task'; task: TaskView; progress: Progress | null }
  | { kind: 'done'; summary: DoneView['summary'] }
  | { kind: 'offline'; pendingCount: number }

export class AnnotationSession {
  private state: SessionState = { kind: 'loading' }
  private readonly queue: PendingQueue
  private lastProgress: Progress | null = null

  constructor(
    private readonly api: ApiClient,
    store: KeyValueStore,
    annotator: string,
  ) {
    this.queue = new PendingQueue(store, annotator)
  }

  current(): SessionState {
    return this.state
  }

  progress(): Progress | null {
    return this.lastProgress
  }

  pendingCount(): number {
    return this.queue.size
  }

  /** Drain queued judgments from an earlier session, then load the next task. */
  async start(): Promise<SessionState> {
    try {
      const ack = await this.queue.flush((t, d, g) => this.api.submitJudgment(t, d, g))
      if (ack) this.lastProgress = ack.progress
    } catch {
      this.state = { kind: 'offline', pendingCount: this.queue.size }
      return this.state
    }
    return this.advance()
  }

  async advance(): Promise<SessionState> {
    const next = await this.api.nextTask()
    if (next.done) {
      this.state = { kind: 'done', summary: next.summary }
    } else {
      this.state = { kind: 'task', task: next, progress: this.lastProgress }
    }
    return this.state
  }

  /** Submit a grade for the current task; on network failure the judgment
   * stays queued and the session flips to offline instead of dropping it. */
  async judge(grade: Grade): Promise<SessionState> {
    if (this.state.kind !== 'task') {
      throw new Error(`cannot judge in state ${this.state.kind}`)
    }
    const { topic, doc } = this.state.task
    this.queue.enqueue({ topic, doc, grade })
    return this.retryPending()
  }

  /** Flush the queue and advance; used for both normal submission and the
   * retry banner's button. */
  async retryPending(): Promise<SessionState> {
    try {
      const ack = await this.queue.flush((t, d, g) => this.api.submitJudgment(t, d, g))
      if (ack) this.lastProgress = ack.progress
    } catch {
      this.state = { kind: 'offline', pendingCount: this.queue.size }
      return this.state
    }
    return this.advance()
  }
}
