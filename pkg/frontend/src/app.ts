/** Session screen wiring. The server is the single source of truth: every
 * interaction POSTs, then re-renders from a fresh GET of the state. */

import { ApiClient, ApiError, type SessionState } from "./api.js";
import {
  adoptionSummary,
  eligibleConcepts,
  historyRows,
  isComplete,
  noveltyTrend,
  poolBadges,
  suggestionCards,
} from "./model.js";

const POLL_INTERVAL_MS = 2000;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export class SessionScreen {
  private sessionId: string | null = null;
  private vocabulary: string[] = [];
  private timer: number | null = null;

  constructor(private api: ApiClient) {}

  async start(): Promise<void> {
    this.vocabulary = await this.api.vocabulary();
    const params = new URLSearchParams(window.location.search);
    const existing = params.get("session");
    this.sessionId = existing ?? (await this.api.createSession({ mode: "human" }));
    if (!existing) {
      params.set("session", this.sessionId);
      history.replaceState(null, "", `?${params}`);
    }
    el<HTMLButtonElement>("step").addEventListener("click", () => this.onStep());
    el<HTMLButtonElement>("skip").addEventListener("click", () => this.onSkip());
    el<HTMLFormElement>("manual-form").addEventListener("submit", (event) => {
      event.preventDefault();
      void this.onManual();
    });
    await this.refresh();
    this.timer = window.setInterval(() => void this.refresh(), POLL_INTERVAL_MS);
  }

  private async refresh(): Promise<void> {
    if (!this.sessionId) return;
    try {
      const state = await this.api.state(this.sessionId);
      this.render(state);
    } catch (error) {
      this.showError(error);
    }
  }

  private async onStep(): Promise<void> {
    if (!this.sessionId) return;
    try {
      await this.api.step(this.sessionId);
      await this.refresh();
    } catch (error) {
      this.showError(error);
    }
  }

  private async onSkip(): Promise<void> {
    if (!this.sessionId) return;
    try {
      await this.api.submitChoice(this.sessionId, { skip: true });
      await this.api.step(this.sessionId);
      await this.refresh();
    } catch (error) {
      this.showError(error);
    }
  }

  private async onManual(): Promise<void> {
    if (!this.sessionId) return;
    const input = el<HTMLInputElement>("manual-concept");
    try {
      await this.api.submitChoice(this.sessionId, { concept: input.value.trim() });
      input.value = "";
      await this.refresh();
    } catch (error) {
      this.showError(error);
    }
  }

  private async onSuggestion(index: number): Promise<void> {
    if (!this.sessionId) return;
    try {
      await this.api.submitChoice(this.sessionId, { proposal_index: index });
      await this.api.step(this.sessionId);
      await this.refresh();
    } catch (error) {
      this.showError(error);
    }
  }

  private render(state: SessionState): void {
    el("error").textContent = "";
    el("progress").textContent = `Generation ${state.generation} / ${state.generations_total}`;
    el("adoption").textContent = `Suggestion adoption: ${adoptionSummary(state)}`;
    el("trend").textContent = `Novelty trend: ${noveltyTrend(state.novelty_trend)}`;

    const pool = el("pool");
    pool.replaceChildren(
      ...poolBadges(state).map((badge) => {
        const chip = document.createElement("span");
        chip.className =
          "chip" + (badge.isOriginal ? " original" : "") + (badge.isNew ? " fresh" : "");
        chip.textContent = badge.label;
        return chip;
      }),
    );

    const expired = el("expired");
    expired.textContent = state.expired.length ? state.expired.join(", ") : "none";

    const suggestions = el("suggestions");
    suggestions.replaceChildren(
      ...suggestionCards(state.suggestions).map((card) => {
        const button = document.createElement("button");
        button.className = "suggestion";
        button.textContent = `${card.concept} — ${card.title}`;
        button.addEventListener("click", () => void this.onSuggestion(card.index));
        return button;
      }),
    );

    const datalist = el<HTMLDataListElement>("concepts");
    datalist.replaceChildren(
      ...eligibleConcepts(this.vocabulary, state).map((label) => {
        const option = document.createElement("option");
        option.value = label;
        return option;
      }),
    );

    const tbody = el("history");
    tbody.replaceChildren(
      ...historyRows(state.history).map((row) => {
        const tr = document.createElement("tr");
        if (row.failed) tr.className = "failed";
        for (const value of [
          String(row.generation),
          row.name,
          row.added,
          row.removed,
          row.novelty,
          row.provenance,
        ]) {
          const td = document.createElement("td");
          td.textContent = value;
          tr.appendChild(td);
        }
        return tr;
      }),
    );

    const done = isComplete(state);
    el<HTMLButtonElement>("step").disabled = done;
    el<HTMLButtonElement>("skip").disabled = done;
    if (done && this.timer !== null) {
      window.clearInterval(this.timer);
      this.timer = null;
      el("progress").textContent += " — complete";
    }
  }

  private showError(error: unknown): void {
    const message =
      error instanceof ApiError ? error.detail : error instanceof Error ? error.message : String(error);
    el("error").textContent = message;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const screen = new SessionScreen(new ApiClient(""));
  void screen.start();
}
