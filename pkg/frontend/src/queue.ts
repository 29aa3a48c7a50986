// Offline submit queue. Failed POSTs (network down, server restarting) are
// parked here and flushed on the next successful contact. Duplicate (409)
// replies during a flush are dropped silently -- the journal already has
// that answer from an earlier life of the page.

import { Answer, Client } from "./api.js";

export interface PendingSubmit {
  task_id: string;
  annotator: string;
  answer: Answer;
}

export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

// localStorage when we have it, a plain map under test / in node
export function memoryStore(): KeyValueStore {
  const m = new Map<string, string>();
  return {
    getItem: (k) => (m.has(k) ? (m.get(k) as string) : null),
    setItem: (k, v) => void m.set(k, v),
  };
}

const QUEUE_KEY = "sensery.pendingSubmits";

export class SubmitQueue {
  constructor(private store: KeyValueStore) {}

  pending(): PendingSubmit[] {
    const raw = this.store.getItem(QUEUE_KEY);
    if (!raw) return [];
    try {
      return JSON.parse(raw) as PendingSubmit[];
    } catch {
      return [];
    }
  }

  push(item: PendingSubmit): void {
    const items = this.pending();
    items.push(item);
    this.store.setItem(QUEUE_KEY, JSON.stringify(items));
  }

  // Replay queued submissions in order; stops at the first network failure
  // so nothing is lost. Returns how many were cleared.
  async flush(client: Client): Promise<number> {
    let items = this.pending();
    let cleared = 0;
    while (items.length > 0) {
      const head = items[0];
      try {
        await client.submit(head.task_id, head.annotator, head.answer);
      } catch (err) {
        break; // still offline; keep the remainder queued
      }
      items = items.slice(1);
      cleared += 1;
      this.store.setItem(QUEUE_KEY, JSON.stringify(items));
    }
    return cleared;
  }
}
