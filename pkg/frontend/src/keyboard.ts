// Keyboard shortcuts: digits 0-3 map straight to relevance grades.

import type { Grade } from './types'

const TEXT_INPUT_TAGS = new Set(['INPUT', 'TEXTAREA', 'SELECT'])

export function gradeForKey(key: string): Grade | null {
  if (key === '0' || key === '1' || key === '2' || key === '3') {
    return Number(key) as Grade
  }
  return null
}

export function shouldIgnoreTarget(target: EventTarget | null): boolean {
  const element = target as { tagName?: string; isContentEditable?: boolean } | null
  if (!element || !element.tagName) return false
  return TEXT_INPUT_TAGS.has(element.tagName) || element.isContentEditable === true
}

export function attachGradeShortcuts(
  window: { addEventListener(type: string, listener: (event: KeyboardEvent) => void): void },
  onGrade: (grade: Grade) => void,
): void {
  window.addEventListener('keydown', (event: KeyboardEvent) => {
    if (shouldIgnoreTarget(event.target)) return
    const grade = gradeForKey(event.key)
    if (grade !== null) {
      event.preventDefault()
      onGrade(grade)
    }
  })
}
