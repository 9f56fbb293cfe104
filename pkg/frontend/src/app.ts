// Respondent flow for the ranking survey: join, read the instructions,
// rank every question by drag or keyboard, submit.  The clock starts at
// the first questionnaire render and stops at submission.  Only
// candidate ids ever exist client-side; the service keeps the blinding.

import { ApiError } from "./api";
import type { Question, Questionnaire, SurveyApi, Verdict } from "./api";
import { RankingState } from "./ranking";

export interface AppOptions {
  root: HTMLElement;
  api: SurveyApi;
  respondentId?: string;
  questionnaireId?: string;
  now?: () => number;
}

interface DragSource {
  questionId: string;
  candidateId: string;
}

export function mountApp(options: AppOptions): SurveyApp {
  return new SurveyApp(options);
}

export class SurveyApp {
  private root: HTMLElement;
  private api: SurveyApi;
  private now: () => number;

  private respondentId = "";
  private instructionsText = "";
  private questionnaire: Questionnaire | null = null;
  private state: RankingState | null = null;
  private startedAtMs = 0;
  private warnedUntouched = false;
  private busy = false;
  private dragging: DragSource | null = null;

  constructor(options: AppOptions) {
    this.root = options.root;
    this.api = options.api;
    this.now = options.now ?? (() => performance.now());
    this.renderJoin(options.respondentId ?? "", options.questionnaireId ?? "");
  }

  private renderJoin(respondentId: string, questionnaireId: string): void {
    this.root.replaceChildren();
    const panel = el("section", "panel join");
    panel.appendChild(el("h1", "", "Translation ranking survey"));

    const respondent = input("respondent", "Respondent id", respondentId);
    const questionnaire = input(
      "questionnaire",
      "Questionnaire id",
      questionnaireId,
    );
    panel.appendChild(labelled("Respondent id", respondent));
    panel.appendChild(labelled("Questionnaire id", questionnaire));

    const start = el("button", "primary", "Start") as HTMLButtonElement;
    start.id = "start";
    start.addEventListener("click", () => {
      void this.start(respondent.value.trim(), questionnaire.value.trim());
    });
    panel.appendChild(start);
    panel.appendChild(statusLine());
    this.root.appendChild(panel);
  }

  private async start(
    respondentId: string,
    questionnaireId: string,
  ): Promise<void> {
    if (this.busy) return;
    if (!respondentId || !questionnaireId) {
      this.setStatus("Both ids are required.");
      return;
    }
    this.busy = true;
    try {
      const [instructions, questionnaire] = await Promise.all([
        this.api.instructions(),
        this.api.questionnaire(questionnaireId),
      ]);
      this.respondentId = respondentId;
      this.instructionsText = instructions;
      this.questionnaire = questionnaire;
      this.renderInstructions();
    } catch (err) {
      this.setStatus(describe(err));
    } finally {
      this.busy = false;
    }
  }

  private renderInstructions(): void {
    this.root.replaceChildren();
    const panel = el("section", "panel instructions");
    panel.appendChild(el("h1", "", "Instructions"));
    const text = el("pre", "instructions-text", this.instructionsText);
    panel.appendChild(text);
    const begin = el("button", "primary", "Begin ranking") as HTMLButtonElement;
    begin.id = "begin";
    begin.addEventListener("click", () => this.renderQuestions());
    panel.appendChild(begin);
    this.root.appendChild(panel);
  }

  private renderQuestions(): void {
    const questionnaire = this.questionnaire;
    if (!questionnaire) return;
    this.state = new RankingState(questionnaire);
    this.startedAtMs = this.now();
    this.warnedUntouched = false;

    this.root.replaceChildren();
    const panel = el("section", "panel questions");
    panel.appendChild(el("h1", "", "Rank the translations"));
    panel.appendChild(
      el("p", "hint", "Best translation first. Drag a candidate, or focus it and use the arrow keys or the buttons."),
    );
    questionnaire.questions.forEach((question, i) => {
      panel.appendChild(
        this.questionSection(question, i + 1, questionnaire.questions.length),
      );
    });

    const submit = el("button", "primary", "Submit") as HTMLButtonElement;
    submit.id = "submit";
    submit.addEventListener("click", () => void this.submit());
    panel.appendChild(submit);
    panel.appendChild(statusLine());
    this.root.appendChild(panel);
  }

  private questionSection(
    question: Question,
    index: number,
    total: number,
  ): HTMLElement {
    const section = el("section", "question");
    section.dataset.question = question.question_id;
    section.appendChild(el("h2", "", `Question ${index} of ${total}`));
    section.appendChild(el("p", "source", question.source_en));
    section.appendChild(this.candidateList(question));
    return section;
  }

  private candidateList(question: Question): HTMLOListElement {
    const state = this.state;
    if (!state) throw new Error("no active ranking");
    const texts = new Map(
      question.candidates.map((c) => [c.candidate_id, c.text]),
    );
    const order = state.order(question.question_id);
    const list = el("ol", "candidates") as HTMLOListElement;

    order.forEach((candidateId, position) => {
      const item = el("li", "candidate") as HTMLLIElement;
      item.dataset.candidate = candidateId;
      item.draggable = true;
      item.tabIndex = 0;
      item.appendChild(el("span", "rank", String(position + 1)));
      item.appendChild(el("span", "text", texts.get(candidateId) ?? ""));

      const controls = el("span", "controls");
      controls.appendChild(
        this.moveButton(question, candidateId, -1, position === 0),
      );
      controls.appendChild(
        this.moveButton(
          question,
          candidateId,
          +1,
          position === order.length - 1,
        ),
      );
      item.appendChild(controls);

      item.addEventListener("keydown", (ev) => {
        if (ev.key !== "ArrowUp" && ev.key !== "ArrowDown") return;
        ev.preventDefault();
        this.moveCandidate(question, candidateId, ev.key === "ArrowUp" ? -1 : 1);
      });
      item.addEventListener("dragstart", (ev) => {
        this.dragging = {
          questionId: question.question_id,
          candidateId,
        };
        ev.dataTransfer?.setData("text/plain", candidateId);
      });
      item.addEventListener("dragover", (ev) => {
        if (this.dragging?.questionId === question.question_id) {
          ev.preventDefault();
        }
      });
      item.addEventListener("drop", (ev) => {
        ev.preventDefault();
        const dragging = this.dragging;
        this.dragging = null;
        if (!dragging || dragging.questionId !== question.question_id) return;
        const target = state.order(question.question_id).indexOf(candidateId);
        if (target < 0) return;
        if (state.place(question.question_id, dragging.candidateId, target)) {
          this.refreshList(question, dragging.candidateId);
        }
      });
      item.addEventListener("dragend", () => {
        this.dragging = null;
      });

      list.appendChild(item);
    });
    return list;
  }

  private moveButton(
    question: Question,
    candidateId: string,
    delta: number,
    disabled: boolean,
  ): HTMLButtonElement {
    const up = delta < 0;
    const button = el(
      "button",
      up ? "move up" : "move down",
      up ? "↑" : "↓",
    ) as HTMLButtonElement;
    button.type = "button";
    button.disabled = disabled;
    button.setAttribute("aria-label", up ? "Move up" : "Move down");
    button.addEventListener("click", () =>
      this.moveCandidate(question, candidateId, delta),
    );
    return button;
  }

  private moveCandidate(
    question: Question,
    candidateId: string,
    delta: number,
  ): void {
    const state = this.state;
    if (!state) return;
    if (state.move(question.question_id, candidateId, delta)) {
      this.refreshList(question, candidateId);
    }
  }

  private refreshList(question: Question, focusCandidateId?: string): void {
    const section = this.root.querySelector(
      `section[data-question="${question.question_id}"]`,
    );
    const list = section?.querySelector("ol.candidates");
    if (!section || !list) return;
    section.replaceChild(this.candidateList(question), list);
    if (focusCandidateId) {
      const item = section.querySelector(
        `li[data-candidate="${focusCandidateId}"]`,
      ) as HTMLElement | null;
      item?.focus();
    }
  }

  private async submit(): Promise<void> {
    const state = this.state;
    if (!state || this.busy) return;
    const untouched = state.untouched();
    if (untouched.length > 0 && !this.warnedUntouched) {
      this.warnedUntouched = true;
      const plural = untouched.length === 1 ? "question" : "questions";
      this.setStatus(
        `The order of ${untouched.length} ${plural} is unchanged. Submit again to send as-is.`,
      );
      return;
    }
    const durationS = (this.now() - this.startedAtMs) / 1000;
    this.busy = true;
    try {
      const verdict = await this.api.submit(
        state.payload(this.respondentId, durationS),
      );
      this.renderDone(verdict);
    } catch (err) {
      this.setStatus(describe(err));
    } finally {
      this.busy = false;
    }
  }

  private renderDone(verdict: Verdict): void {
    this.root.replaceChildren();
    const panel = el("section", "panel done");
    panel.appendChild(el("h1", "", "Response recorded"));
    panel.appendChild(el("p", "response-id", `Reference: ${verdict.response_id}`));
    panel.appendChild(
      el(
        "p",
        verdict.accepted ? "verdict accepted" : "verdict flagged",
        verdict.accepted
          ? "Thank you. Your rankings were accepted."
          : "Thank you. Your submission was flagged for review.",
      ),
    );
    this.root.appendChild(panel);
  }

  private setStatus(message: string): void {
    const line = this.root.querySelector("p.status");
    if (line) line.textContent = message;
  }
}

function el(tag: string, className = "", text = ""): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function input(id: string, label: string, value: string): HTMLInputElement {
  const node = el("input") as HTMLInputElement;
  node.id = id;
  node.type = "text";
  node.value = value;
  node.setAttribute("aria-label", label);
  return node;
}

function labelled(text: string, control: HTMLElement): HTMLElement {
  const wrap = el("label", "field");
  wrap.appendChild(el("span", "field-name", text));
  wrap.appendChild(control);
  return wrap;
}

function statusLine(): HTMLElement {
  const line = el("p", "status");
  line.setAttribute("role", "status");
  return line;
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `Request failed: ${err.message}`;
  if (err instanceof Error) return `Request failed: ${err.message}`;
  return "Request failed.";
}
