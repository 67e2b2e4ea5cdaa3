import { describe, expect, it } from 'vitest'

import { ApiClient } from '../src/api'
import { MemoryStore } from '../src/queue'
import { AnnotationSession } from '../src/session'
import { MockService, type MockTask } from './mock_service'

const ANNOTATOR = 'alice'
const TOKEN = 'tok-alice'

function tasks(): MockTask[] {
  return [
    { topic: 't1', doc: 'd0' },
    { topic: 't1', doc: 'd1' },
    { topic: 't1', doc: 'd2' },
  ]
}

function setup(service: MockService, store = new MemoryStore()) {
  const api = new ApiClient('', TOKEN, ANNOTATOR, service.fetch)
  return { api, store, session: new AnnotationSession(api, store, ANNOTATOR) }
}

describe('network-failure handling', () => {
  it('request lost before the server commits: judgment retried, not lost', async () => {
    const service = new MockService(ANNOTATOR, TOKEN, tasks())
    const { session } = setup(service)
    let state = await session.start()
    expect(state.kind).toBe('task')

    service.injectFailure('network-before-commit')
    state = await session.judge(2)
    expect(state.kind).toBe('offline')
    expect(session.pendingCount()).toBe(1)
    expect(service.exportQrels().size).toBe(0) // server never saw it

    state = await session.retryPending()
    expect(state.kind).toBe('task')
    expect(session.pendingCount()).toBe(0)
    expect(service.exportQrels().get('t1|d0')).toBe(2)
    expect(session.progress()?.judged).toBe(1)
  })

  it('response lost after the server commits: replay causes no duplicate', async () => {
    const service = new MockService(ANNOTATOR, TOKEN, tasks())
    const { session } = setup(service)
    await session.start()

    service.injectFailure('network-after-commit')
    let state = await session.judge(3)
    expect(state.kind).toBe('offline')
    expect(service.exportQrels().get('t1|d0')).toBe(3) // committed server-side

    state = await session.retryPending()
    expect(state.kind).toBe('task')
    // replay folded last-write-wins: still exactly one judgment, one increment
    expect(service.exportQrels().size).toBe(1)
    expect(service.exportQrels().get('t1|d0')).toBe(3)
    expect(session.progress()?.judged).toBe(1)
  })

  it('page reload mid-flight: persisted queue resubmits on next start', async () => {
    const service = new MockService(ANNOTATOR, TOKEN, tasks())
    const store = new MemoryStore()
    const first = setup(service, store)
    await first.session.start()
    service.injectFailure('network-before-commit')
    const state = await first.session.judge(1)
    expect(state.kind).toBe('offline')

    // a "reload": fresh session over the same persistent store
    const second = setup(service, store)
    const resumed = await second.session.start()
    expect(resumed.kind).toBe('task')
    expect(service.exportQrels().get('t1|d0')).toBe(1)
    expect(second.session.pendingCount()).toBe(0)
    expect(second.session.progress()?.judged).toBe(1)
    if (resumed.kind === 'task') {
      expect(resumed.task.doc).toBe('d1') // queue advanced past the replayed task
    }
  })

  it('a newer grade for the same task supersedes the queued one', async () => {
    const service = new MockService(ANNOTATOR, TOKEN, tasks())
    const store = new MemoryStore()
    const { session } = setup(service, store)
    await session.start()
    service.injectFailure('network-before-commit')
    await session.judge(0)
    expect(session.pendingCount()).toBe(1)
    // still offline; user changes their mind before retrying
    service.injectFailure('network-before-commit')
    await session.retryPending()
    expect(session.pendingCount()).toBe(1)
    const fresh = setup(service, store)
    await fresh.session.start()
    expect(service.exportQrels().get('t1|d0')).toBe(0)
    expect(service.exportQrels().size).toBe(1)
  })
})
