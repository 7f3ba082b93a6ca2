// Typed client for the tbx HTTP API. The UI talks to the server only
// through this module; rename-apply is the single mutating call.

export interface SearchResultRow {
  drawing_id: string;
  fields: Record<string, string[]>;
  thumbnail: string | null;
}

export interface SearchResponse {
  ids: string[];
  results: SearchResultRow[];
}

export interface KeywordValue {
  value: string;
  count: number;
}

export interface KeywordInfo {
  records: number;
  top_values: KeywordValue[];
}

export type KeywordSummary = Record<string, KeywordInfo>;

export interface RenameEntry {
  drawing_id: string;
  old_name: string;
  new_name: string;
}

export interface RenamePlanResponse {
  entries: RenameEntry[];
  collisions: string[];
  hash: string;
}

export interface ApplyOutcome {
  drawing_id: string;
  outcome: string;
}

/** A query the server refused to parse; offset points into the query text. */
export class QuerySyntaxError extends Error {
  offset: number;
  expected: string | null;

  constructor(message: string, offset: number, expected: string | null) {
    super(message);
    this.offset = offset;
    this.expected = expected;
  }
}

export interface ApiClient {
  search(query: string, signal?: AbortSignal): Promise<SearchResponse>;
  keys(): Promise<KeywordSummary>;
  groups(key: string): Promise<Record<string, string[]>>;
  renamePlan(template: string): Promise<RenamePlanResponse>;
  renameApply(hash: string): Promise<ApplyOutcome[]>;
}

async function fail(res: Response): Promise<never> {
  let detail = res.statusText;
  try {
    const body = await res.json();
    if (typeof body.offset === "number") {
      throw new QuerySyntaxError(body.error ?? "syntax error", body.offset, body.expected ?? null);
    }
    detail = body.error ?? body.detail ?? detail;
  } catch (err) {
    if (err instanceof QuerySyntaxError) throw err;
  }
  throw new Error(detail);
}

export function createApiClient(baseUrl = ""): ApiClient {
  return {
    async search(query: string, signal?: AbortSignal): Promise<SearchResponse> {
      const res = await fetch(`${baseUrl}/api/search?q=${encodeURIComponent(query)}`, { signal });
      if (!res.ok) await fail(res);
      return res.json();
    },

    async keys(): Promise<KeywordSummary> {
      const res = await fetch(`${baseUrl}/api/keys`);
      if (!res.ok) await fail(res);
      return res.json();
    },

    async groups(key: string): Promise<Record<string, string[]>> {
      const res = await fetch(`${baseUrl}/api/groups?key=${encodeURIComponent(key)}`);
      if (!res.ok) await fail(res);
      return res.json();
    },

    async renamePlan(template: string): Promise<RenamePlanResponse> {
      const res = await fetch(`${baseUrl}/api/rename-plan`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ template }),
      });
      if (!res.ok) await fail(res);
      return res.json();
    },

    async renameApply(hash: string): Promise<ApplyOutcome[]> {
      const res = await fetch(`${baseUrl}/api/rename-apply`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ hash }),
      });
      if (!res.ok) await fail(res);
      const body = await res.json();
      return body.outcomes;
    },
  };
}
