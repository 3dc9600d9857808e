// Card state for the measurement queue, kept separate from the DOM so the
// optimistic-update rules are testable on their own.
//
// A card tracks one pending measurement request. Submitting hides the card
// immediately; a server error brings it back with the message attached. While
// a submission is in flight the card accepts no second one, and polls that
// still list the request must not resurrect it.

import type { PendingRequest } from "./api.js";

export interface Card {
  request: PendingRequest;
  inFlight: boolean;
  hidden: boolean;
  error: string | null;
}

/** Parse operator input as a non-negative decimal; null means "do not send". */
export function parseRpm(text: string): number | null {
  const trimmed = text.trim();
  if (trimmed === "" || !/^[0-9]+(\.[0-9]+)?$/.test(trimmed)) return null;
  const value = Number(trimmed);
  return Number.isFinite(value) ? value : null;
}

export class PendingStore {
  private cards = new Map<string, Card>();

  /** Replace the card set with the server's pending list. */
  reconcile(requests: PendingRequest[]): void {
    const next = new Map<string, Card>();
    for (const request of requests) {
      const existing = this.cards.get(request.requestId);
      // keep optimistic state for requests the server still lists
      next.set(request.requestId, existing ?? {
        request,
        inFlight: false,
        hidden: false,
        error: null,
      });
    }
    this.cards = next;
  }

  /** Cards in request-id order, submitted ones excluded. */
  visible(): Card[] {
    return [...this.cards.values()]
      .filter((card) => !card.hidden)
      .sort((a, b) => a.request.requestId.localeCompare(b.request.requestId));
  }

  get(requestId: string): Card | undefined {
    return this.cards.get(requestId);
  }

  /**
   * Claim the card for one submission: hide it and mark it in flight.
   * Returns false when no such card exists or one is already in flight.
   */
  beginSubmit(requestId: string): boolean {
    const card = this.cards.get(requestId);
    if (!card || card.inFlight) return false;
    card.inFlight = true;
    card.hidden = true;
    card.error = null;
    return true;
  }

  /** The server acknowledged: the card is gone for good. */
  submitSucceeded(requestId: string): void {
    this.cards.delete(requestId);
  }

  /** Roll the optimistic removal back and surface the error on the card. */
  submitFailed(requestId: string, message: string): void {
    const card = this.cards.get(requestId);
    if (!card) return;
    card.inFlight = false;
    card.hidden = false;
    card.error = message;
  }
}
