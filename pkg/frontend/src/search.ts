// External search assist: exactly one {query} substitution, or no link at all.

export function buildSearchLink(
  template: string | null | undefined,
  topicTitle: string,
): string | null {
  if (!template || !template.includes('{query}')) return null
  return template.replace('{query}', encodeURIComponent(topicTitle))
}
