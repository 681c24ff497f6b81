/** Session view-model: wraps the API into UI state transitions.
 *
 * The server is the single source of truth; this controller never does
 * client-side inference. It guards the two interactive hazards: double
 * clicks (an in-flight flag makes the second click a no-op) and stale
 * step submissions (a 409 triggers a silent refetch, never a resubmit).
 */

import { ApiError, PrefApi } from "./api.js";
import type { SessionConfigInput, SessionStatus, StateDoc, TrialDoc } from "./types.js";

export type ChoiceLabel = "A" | "B";

export interface UiSessionView {
  sessionId: string | null;
  status: SessionStatus | null;
  /** Trial index shown to the user; echoed on submit. */
  trialStep: number | null;
  /** A card is always the reference, B the alternative. */
  cardA: number[] | null;
  cardB: number[] | null;
  /** Screen order of the two cards, re-randomized per trial. */
  screenOrder: [ChoiceLabel, ChoiceLabel];
  thetaEstimate: number[] | null;
  alphaMean: number[];
  alphaCov: number[][];
  rsu: number | null;
  miTrace: number[];
  responsesAccepted: number;
  stale: boolean;
  missedPolls: number;
  banner: string | null;
  busy: boolean;
}

const EMPTY: UiSessionView = {
  sessionId: null,
  status: null,
  trialStep: null,
  cardA: null,
  cardB: null,
  screenOrder: ["A", "B"],
  thetaEstimate: null,
  alphaMean: [],
  alphaCov: [],
  rsu: null,
  miTrace: [],
  responsesAccepted: 0,
  stale: false,
  missedPolls: 0,
  banner: null,
  busy: false,
};

export type ViewListener = (view: UiSessionView) => void;

export class SessionController {
  private view: UiSessionView = { ...EMPTY };
  private listeners: ViewListener[] = [];

  constructor(
    private readonly api: PrefApi,
    /** Injectable for deterministic tests; drives card screen order only. */
    private readonly random: () => number = Math.random,
  ) {}

  snapshot(): UiSessionView {
    return { ...this.view, miTrace: [...this.view.miTrace], screenOrder: [...this.view.screenOrder] };
  }

  onChange(fn: ViewListener): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    const snap = this.snapshot();
    for (const fn of this.listeners) fn(snap);
  }

  private applyState(doc: StateDoc): void {
    const trial: TrialDoc | null = doc.trial;
    const trialChanged = trial !== null && trial.step !== this.view.trialStep;
    this.view = {
      ...this.view,
      sessionId: doc.id,
      status: doc.status,
      trialStep: trial ? trial.step : null,
      cardA: trial ? trial.original.ref : null,
      cardB: trial ? trial.original.alt : null,
      screenOrder: trialChanged
        ? this.random() < 0.5
          ? ["A", "B"]
          : ["B", "A"]
        : this.view.screenOrder,
      thetaEstimate: doc.theta_estimate,
      alphaMean: doc.alpha_mean,
      alphaCov: doc.alpha_cov,
      rsu: doc.rsu,
      miTrace: doc.mi_trace,
      responsesAccepted: doc.step,
      stale: false,
      missedPolls: 0,
      banner: null,
    };
  }

  async start(config: SessionConfigInput): Promise<void> {
    try {
      const doc = await this.api.createSession(config);
      this.applyState(doc);
    } catch (err) {
      this.view = { ...this.view, banner: describe(err) };
    }
    this.emit();
  }

  /** Restore an existing session after a reload: server state only. */
  async resume(sessionId: string): Promise<void> {
    try {
      const doc = await this.api.getState(sessionId);
      this.applyState(doc);
    } catch (err) {
      this.view = { ...this.view, banner: describe(err) };
    }
    this.emit();
  }

  get terminal(): boolean {
    return this.view.status !== null && this.view.status !== "awaiting_response";
  }

  /** Submit the user's choice. A = reference (r=0), B = alternative (r=1). */
  async choose(label: ChoiceLabel): Promise<void> {
    const { sessionId, trialStep, busy } = this.view;
    if (!sessionId || trialStep === null || busy || this.terminal) return;
    this.view = { ...this.view, busy: true };
    this.emit();
    try {
      const doc = await this.api.postResponse(sessionId, trialStep, label === "B" ? 1 : 0);
      this.applyState(doc);
      this.view = { ...this.view, busy: false };
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // Someone else (or a retry) already answered this step: converge
        // on the server's view without submitting again.
        try {
          const doc = await this.api.getState(sessionId);
          this.applyState(doc);
        } catch (refetchErr) {
          this.view = { ...this.view, banner: describe(refetchErr) };
        }
        this.view = { ...this.view, busy: false };
      } else {
        this.view = { ...this.view, busy: false, banner: describe(err) };
      }
    }
    this.emit();
  }

  /** One metrics poll; call on an interval. Three misses flag staleness. */
  async poll(): Promise<void> {
    const { sessionId } = this.view;
    if (!sessionId) return;
    try {
      const doc = await this.api.getState(sessionId);
      this.applyState(doc);
    } catch {
      const missed = this.view.missedPolls + 1;
      this.view = { ...this.view, missedPolls: missed, stale: missed >= 3 };
    }
    this.emit();
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  if (err instanceof Error) return err.message;
  return String(err);
}
