// Thin typed client over the documented service endpoints. Nothing else is
// ever called, and no primary-judgment data exists anywhere client-side.

import type {
  Grade,
  JudgmentAck,
  NarrativeAck,
  NextTaskResponse,
  Progress,
  ServiceConfig,
  TopicInfo,
} from './types'

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`)
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly annotator: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private headers(): Record<string, string> {
    return {
      Authorization: `Bearer ${this.token}`,
      'Content-Type': 'application/json',
    }
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      ...init,
      headers: { ...this.headers(), ...(init?.headers ?? {}) },
    })
    if (!response.ok) {
      let detail = response.statusText
      try {
        const body = await response.json()
        if (body && typeof body.detail === 'string') detail = body.detail
      } catch {
        // keep the status text
      }
      throw new ApiError(response.status, detail)
    }
    return (await response.json()) as T
  }

  getConfig(): Promise<ServiceConfig> {
    return this.request<ServiceConfig>('/config')
  }

  getTopics(): Promise<TopicInfo[]> {
    return this.request<TopicInfo[]>(`/topics?annotator=${encodeURIComponent(this.annotator)}`)
  }

  nextTask(): Promise<NextTaskResponse> {
    return this.request<NextTaskResponse>(
      `/task/next?annotator=${encodeURIComponent(this.annotator)}`,
    )
  }

  getProgress(): Promise<Progress> {
    return this.request<Progress>(`/progress?annotator=${encodeURIComponent(this.annotator)}`)
  }

  submitJudgment(topic: string, doc: string, grade: Grade): Promise<JudgmentAck> {
    return this.request<JudgmentAck>('/judgment', {
      method: 'POST',
      body: JSON.stringify({ annotator: this.annotator, topic, doc, grade }),
    })
  }

  submitNarrative(topic: string, narrativeText: string): Promise<NarrativeAck> {
    return this.request<NarrativeAck>('/narrative', {
      method: 'POST',
      body: JSON.stringify({
        annotator: this.annotator,
        topic,
        narrative_text: narrativeText,
      }),
    })
  }

  submitFlag(topic: string, note: string, doc?: string): Promise<{ ok: boolean }> {
    return this.request<{ ok: boolean }>('/flag', {
      method: 'POST',
      body: JSON.stringify({ annotator: this.annotator, topic, note, doc: doc ?? null }),
    })
  }
}
