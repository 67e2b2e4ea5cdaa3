// Pending-judgment queue: a judgment is persisted before the first network
// attempt and removed only once the service acknowledges it, so a failed or
// interrupted submission is never silently dropped. Replaying after a reload
// is safe because the service folds resubmissions last-write-wins and counts
// progress per distinct task.

import type { Grade, JudgmentAck, PendingJudgment } from './types'

export interface KeyValueStore {
  getItem(key: string): string | null
  setItem(key: string, value: string): void
  removeItem(key: string): void
}

export class MemoryStore implements KeyValueStore {
  private data = new Map<string, string>()
  getItem(key: string): string | null {
    return this.data.has(key) ? (this.data.get(key) as string) : null
  }
  setItem(key: string, value: string): void {
    this.data.set(key, value)
  }
  removeItem(key: string): void {
    this.data.delete(key)
  }
}

export type SubmitFn = (
  topic: string,
  doc: string,
  grade: Grade,
) => Promise<JudgmentAck>

export class PendingQueue {
  private readonly key: string

  constructor(
    private readonly store: KeyValueStore,
    annotator: string,
  ) {
    this.key = `shelflife.pending.${annotator}`
  }

  pending(): PendingJudgment[] {
    const raw = this.store.getItem(this.key)
    if (!raw) return []
    try {
      return JSON.parse(raw) as PendingJudgment[]
    } catch {
      return []
    }
  }

  private save(items: PendingJudgment[]): void {
    if (items.length === 0) {
      this.store.removeItem(this.key)
    } else {
      this.store.setItem(this.key, JSON.stringify(items))
    }
  }

  enqueue(item: PendingJudgment): void {
    // a later grade for the same task supersedes the queued one
    const items = this.pending().filter(
      (p) => !(p.topic === item.topic && p.doc === item.doc),
    )
    items.push(item)
    this.save(items)
  }

  /** Try to submit everything queued, oldest first. Stops at the first
   * failure (items stay queued); returns the last acknowledgment seen. */
  async flush(submit: SubmitFn): Promise<JudgmentAck | null> {
    let lastAck: JudgmentAck | null = null
    let items = this.pending()
    while (items.length > 0) {
      const head = items[0]
      try {
        lastAck = await submit(head.topic, head.doc, head.grade)
      } catch (error) {
        this.save(items) // keep everything not yet acknowledged
        throw error
      }
      items = items.slice(1)
      this.save(items)
    }
    return lastAck
  }

  get size(): number {
    return this.pending().length
  }
}
