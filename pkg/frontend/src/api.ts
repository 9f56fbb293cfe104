// Typed client for the ranking survey service REST API.
// Questionnaires arrive blinded: candidate ids only, never system ids.

export interface Candidate {
  candidate_id: string;
  text: string;
}

export interface Question {
  question_id: string;
  source_en: string;
  candidates: Candidate[];
}

export interface Questionnaire {
  questionnaire_id: string;
  questions: Question[];
}

export interface Ranking {
  question_id: string;
  order: string[]; // candidate ids, best first
}

export interface ResponsePayload {
  questionnaire_id: string;
  respondent_id: string;
  rankings: Ranking[];
  total_duration_s: number;
}

export interface Validity {
  time_flag: boolean;
  ordering_flag: boolean;
  accepted: boolean;
  override: boolean | null;
}

export interface Verdict {
  response_id: string;
  accepted: boolean;
  validity: Validity;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export interface SurveyApi {
  instructions(): Promise<string>;
  questionnaire(id: string): Promise<Questionnaire>;
  submit(payload: ResponsePayload): Promise<Verdict>;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class SurveyClient implements SurveyApi {
  private base: string;
  private fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  async instructions(): Promise<string> {
    const res = await this.fetchFn(`${this.base}/instructions`);
    if (!res.ok) throw await readError(res);
    return res.text();
  }

  async questionnaire(id: string): Promise<Questionnaire> {
    const res = await this.fetchFn(
      `${this.base}/questionnaires/${encodeURIComponent(id)}`,
    );
    if (!res.ok) throw await readError(res);
    return res.json();
  }

  async submit(payload: ResponsePayload): Promise<Verdict> {
    const res = await this.fetchFn(`${this.base}/responses`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!res.ok) throw await readError(res);
    return res.json();
  }
}

async function readError(res: Response): Promise<ApiError> {
  let detail = `${res.status}`;
  try {
    const body = await res.json();
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; the status code is all we have
  }
  return new ApiError(res.status, detail);
}
