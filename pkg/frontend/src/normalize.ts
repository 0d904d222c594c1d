// Client-side mirror of the service's "empty after normalization" rule, used
// only to disable the submit button early. The list matches the service's
// shipped stopword resource; the server remains the authority (400 on empty).

const STOPWORDS = new Set([
  "a", "an", "the",
  "he", "she", "it", "his", "her", "its", "they", "them", "their",
  "i", "you", "we", "my", "your", "this", "that", "these", "those",
  "is", "are", "was", "were", "be", "been", "being",
  "and", "or", "but",
  "with", "on", "in", "of", "to", "at", "from", "by", "for",
]);

export function contentTokens(text: string): string[] {
  return text
    .toLowerCase()
    .replace(/[^a-z0-9\s]/g, " ")
    .split(/\s+/)
    .filter((token) => token.length > 0 && !STOPWORDS.has(token));
}

export function normalizesToEmpty(text: string): boolean {
  return contentTokens(text).length === 0;
}
