/** Documents exchanged with the elicitation service (JSON over HTTP). */

export interface TrialDoc {
  step: number;
  original: { ref: number[]; alt: number[] };
  transformed: { ref: number[]; alt: number[] };
}

export type SessionStatus = "awaiting_response" | "converged" | "max_steps_reached";

export interface StateDoc {
  id: string;
  status: SessionStatus;
  step: number;
  dims: number;
  theta_estimate: number[] | null;
  lambda_estimate: number[] | null;
  alpha_mean: number[];
  alpha_cov: number[][];
  rsu: number | null;
  mi_trace: number[];
  trial: TrialDoc | null;
  config: unknown;
  seed: number;
  created_ms?: number;
  updated_ms?: number;
}

export interface SessionSummary {
  id: string;
  status: SessionStatus;
  step: number;
}

export interface SessionConfigInput {
  dims?: number;
  seed?: number;
  mh?: Record<string, number>;
  mi?: Record<string, number | string>;
  stop?: Record<string, number>;
}

export interface ErrorBody {
  error: string;
  message: string;
}
