/** Session state: the active user, their results, and profile snapshots.
 *
 * The UI computes nothing itself; every number in the view is copied
 * from an API response. Responses superseded by a newer query are
 * discarded by sequence number.
 */

import { ApiClient, ApiError, ProfileResponse, RankedResult } from "./api.js";

export interface ProfileSnapshot {
  label: string;
  weights: Record<string, number>;
}

export interface SessionView {
  userId: string | null;
  queryText: string;
  results: RankedResult[];
  lastQueryVector: Record<string, number>;
  /** Uniform state right after registration (chart baseline). */
  initialWeights: Record<string, number> | null;
  /** One snapshot per issued query this session. */
  snapshots: ProfileSnapshot[];
  error: string | null;
  busy: boolean;
}

export type SessionListener = (view: SessionView) => void;

function emptyView(): SessionView {
  return {
    userId: null,
    queryText: "",
    results: [],
    lastQueryVector: {},
    initialWeights: null,
    snapshots: [],
    error: null,
    busy: false,
  };
}

export class Session {
  readonly view: SessionView = emptyView();
  private sequence = 0;

  constructor(
    private readonly api: ApiClient,
    private readonly onChange: SessionListener = () => {},
  ) {}

  private emit(): void {
    this.onChange(this.view);
  }

  /** Register a new user and remember their uniform starting profile. */
  async register(userId: string): Promise<void> {
    const trimmed = userId.trim();
    if (!trimmed) {
      this.view.error = "user id must not be empty";
      this.emit();
      return;
    }
    this.view.busy = true;
    this.emit();
    try {
      await this.api.register(trimmed);
      const profile = await this.api.profile(trimmed);
      this.adopt(trimmed, profile);
    } catch (error) {
      this.view.error = describe(error);
    } finally {
      this.view.busy = false;
      this.emit();
    }
  }

  /** Switch to an already registered user. */
  async selectUser(userId: string): Promise<void> {
    this.view.busy = true;
    this.emit();
    try {
      const profile = await this.api.profile(userId);
      this.adopt(userId, profile);
    } catch (error) {
      this.view.error = describe(error);
    } finally {
      this.view.busy = false;
      this.emit();
    }
  }

  private adopt(userId: string, profile: ProfileResponse): void {
    this.view.userId = userId;
    this.view.initialWeights = { ...profile.weights };
    this.view.snapshots = [];
    this.view.results = [];
    this.view.lastQueryVector = {};
    this.view.error = null;
  }

  /**
   * Issue a query, render its results, then fetch the updated profile
   * and append one snapshot. Stale responses (a newer query was issued
   * meanwhile) are dropped without touching the view.
   */
  async searchAndRefresh(input: { text?: string; concept?: string }): Promise<void> {
    if (!this.view.userId) {
      this.view.error = "register or select a user first";
      this.emit();
      return;
    }
    const text = input.text?.trim() ?? "";
    const concept = input.concept?.trim() ?? "";
    if (!text && !concept) {
      this.view.error = "type a query first";
      this.emit();
      return; // no request leaves the backend untouched
    }
    const ticket = ++this.sequence;
    this.view.busy = true;
    this.view.error = null;
    this.emit();
    try {
      const response = await this.api.search({
        user_id: this.view.userId,
        ...(text ? { query: text } : { concept }),
      });
      if (ticket !== this.sequence) return; // superseded
      const profile = await this.api.profile(this.view.userId);
      if (ticket !== this.sequence) return;
      this.view.results = response.results;
      this.view.lastQueryVector = response.query_vector;
      this.view.queryText = text || concept;
      this.view.snapshots = [
        ...this.view.snapshots,
        { label: text || concept, weights: { ...profile.weights } },
      ];
    } catch (error) {
      if (ticket !== this.sequence) return;
      if (error instanceof ApiError && error.status === 422) {
        this.view.error = "no concepts recognized";
      } else {
        this.view.error = describe(error);
      }
    } finally {
      if (ticket === this.sequence) {
        this.view.busy = false;
        this.emit();
      }
    }
  }

  /** Weight series for one concept: baseline plus one value per query. */
  series(concept: string): number[] {
    const points: number[] = [];
    if (this.view.initialWeights && concept in this.view.initialWeights) {
      points.push(this.view.initialWeights[concept] as number);
    }
    for (const snapshot of this.view.snapshots) {
      if (concept in snapshot.weights) {
        points.push(snapshot.weights[concept] as number);
      }
    }
    return points;
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return error.detail;
  if (error instanceof Error) return error.message;
  return String(error);
}
