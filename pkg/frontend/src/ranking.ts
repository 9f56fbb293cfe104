// Ranking state for one questionnaire, kept apart from the DOM so it
// can be tested directly.  Orders start at display order; a question
// counts as touched only once an interaction actually changed it.

import type { Questionnaire, ResponsePayload } from "./api";

export class RankingState {
  private questionnaireId: string;
  private questionIds: string[];
  private orders: Map<string, string[]>;
  private touchedIds: Set<string>;

  constructor(questionnaire: Questionnaire) {
    this.questionnaireId = questionnaire.questionnaire_id;
    this.questionIds = questionnaire.questions.map((q) => q.question_id);
    this.orders = new Map();
    this.touchedIds = new Set();
    for (const q of questionnaire.questions) {
      this.orders.set(
        q.question_id,
        q.candidates.map((c) => c.candidate_id),
      );
    }
  }

  order(questionId: string): string[] {
    const order = this.orders.get(questionId);
    return order ? [...order] : [];
  }

  touched(questionId: string): boolean {
    return this.touchedIds.has(questionId);
  }

  untouched(): string[] {
    return this.questionIds.filter((q) => !this.touchedIds.has(q));
  }

  /** Move a candidate by delta positions; clamps at the ends. */
  move(questionId: string, candidateId: string, delta: number): boolean {
    const order = this.orders.get(questionId);
    if (!order) return false;
    const from = order.indexOf(candidateId);
    if (from < 0) return false;
    const to = Math.min(Math.max(from + delta, 0), order.length - 1);
    return this.shift(questionId, order, from, to);
  }

  /** Drop a candidate at an absolute position; clamps at the ends. */
  place(questionId: string, candidateId: string, index: number): boolean {
    const order = this.orders.get(questionId);
    if (!order) return false;
    const from = order.indexOf(candidateId);
    if (from < 0) return false;
    const to = Math.min(Math.max(index, 0), order.length - 1);
    return this.shift(questionId, order, from, to);
  }

  payload(respondentId: string, totalDurationS: number): ResponsePayload {
    return {
      questionnaire_id: this.questionnaireId,
      respondent_id: respondentId,
      rankings: this.questionIds.map((q) => ({
        question_id: q,
        order: this.order(q),
      })),
      total_duration_s: totalDurationS,
    };
  }

  private shift(
    questionId: string,
    order: string[],
    from: number,
    to: number,
  ): boolean {
    if (from === to) return false;
    const [candidate] = order.splice(from, 1);
    order.splice(to, 0, candidate);
    this.touchedIds.add(questionId);
    return true;
  }
}
