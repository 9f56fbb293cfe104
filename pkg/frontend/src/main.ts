// Entry point.  The service origin defaults to the page origin and can
// be overridden with ?service=; ?questionnaire= and ?respondent=
// prefill the join form so links can be handed out.

import { SurveyClient } from "./api";
import { mountApp } from "./app";
import "./styles.css";

const params = new URLSearchParams(window.location.search);
const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");

mountApp({
  root,
  api: new SurveyClient(params.get("service") ?? window.location.origin),
  respondentId: params.get("respondent") ?? "",
  questionnaireId: params.get("questionnaire") ?? "",
});
