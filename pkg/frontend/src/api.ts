// Request API client: one POST per verb, correlation ids, typed failures.

import { ApiResponse, PROTOCOL_VERSION } from "./protocol.js";

export class ApiFailure extends Error {
  constructor(
    public code: string,
    message: string,
    public currentRevision?: number,
  ) {
    super(message);
  }
}

export class ApiClient {
  token: string | null = null;
  private counter = 0;

  constructor(
    private base: string = "",
    private fetchImpl: typeof fetch = fetch.bind(globalThis),
  ) {}

  async call<T = Record<string, unknown>>(
    verb: string,
    payload: Record<string, unknown> = {},
  ): Promise<T> {
    const correlation = `ui-${++this.counter}`;
    const record: Record<string, unknown> = {
      protocol_version: PROTOCOL_VERSION,
      verb,
      correlation_id: correlation,
      payload,
    };
    if (this.token) record.token = this.token;
    const response = await this.fetchImpl(`${this.base}/api`, {
      method: "POST",
      body: JSON.stringify(record),
    });
    const body = (await response.json()) as ApiResponse<T>;
    if (!body.ok || !body.payload) {
      const error = body.error ?? { code: "INTERNAL", message: "no error detail" };
      throw new ApiFailure(error.code, error.message, error.current_revision);
    }
    if (body.correlation_id !== correlation) {
      throw new ApiFailure("INTERNAL", "correlation id mismatch");
    }
    return body.payload;
  }

  async login(username: string, password: string): Promise<{
    token: string;
    user_id: string;
    role: string;
    locale: string;
  }> {
    const payload = await this.call<{
      token: string;
      user_id: string;
      role: string;
      locale: string;
    }>("auth", { username, password });
    this.token = payload.token;
    return payload;
  }
}
