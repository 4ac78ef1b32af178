// Browser bootstrap: renders the wizard into #app and dispatches
// data-action clicks/changes/submits back into the state machine.

import { ApiClient } from "./api.js";
import { Wizard } from "./state.js";
import { viewApp } from "./views.js";
import type { Remedy, UnitPath } from "./types.js";

const root = document.getElementById("app")!;
const wizard = new Wizard(new ApiClient(""));

function formValues(form: HTMLFormElement): Record<string, string> {
  const out: Record<string, string> = {};
  new FormData(form).forEach((value, key) => {
    out[key] = String(value);
  });
  return out;
}

function render() {
  root.innerHTML = viewApp(wizard.state, wizard);
}

wizard.onChange = render;

root.addEventListener("click", (event) => {
  const el = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (!el || el instanceof HTMLFormElement || el instanceof HTMLInputElement) return;
  const action = el.dataset.action!;
  const raw = el.dataset.arg;
  const parsed = raw === undefined ? undefined : (JSON.parse(raw) as unknown);
  switch (action) {
    case "pick-generic":
      void wizard.pickGeneric(parsed as string);
      break;
    case "back":
      wizard.back();
      break;
    case "goto-query":
      wizard.goto("query");
      break;
    case "restart":
      wizard.state = Object.assign(wizard.state, { screen: "pick-generic", session: null });
      void wizard.loadGenerics();
      break;
    case "choose-version":
      void wizard.chooseVersion(Number(raw));
      break;
    case "accept-unit":
      void wizard.acceptCurrent();
      break;
    case "prev-unit":
      wizard.prevUnit();
      break;
    case "toggle-help":
      wizard.toggleHelp();
      break;
    case "open-editor":
      wizard.openEditor(true);
      break;
    case "close-editor":
      wizard.openEditor(false);
      break;
    case "toggle-optional": {
      const { path, include } = parsed as { path: UnitPath; include: boolean };
      void wizard.toggleOptional(path, include);
      break;
    }
    case "review-unit":
      wizard.reviewUnit(parsed as UnitPath);
      break;
    case "run-check":
      void wizard.runCheck();
      break;
    case "goto-review":
      void wizard.gotoReview();
      break;
    case "finalize":
      void wizard.finalizeDraft();
      break;
    case "remedy":
      void wizard.applyRemedy(parsed as Remedy);
      break;
    case "expand":
      void wizard.expand(parsed as string);
      break;
  }
});

root.addEventListener("change", (event) => {
  const el = event.target as HTMLElement;
  if (el instanceof HTMLInputElement && el.dataset.action === "toggle-autocheck") {
    void wizard.toggleAutocheck(el.checked);
  }
  if (el instanceof HTMLInputElement && el.dataset.action === "set-unit-param") {
    void wizard.setUnitParam(JSON.parse(el.dataset.arg!) as string, el.value);
  }
});

root.addEventListener("submit", (event) => {
  const form = event.target as HTMLFormElement;
  if (!form.dataset.action) return;
  event.preventDefault();
  const values = formValues(form);
  if (form.dataset.action === "submit-meta") {
    const params: Record<string, string> = {};
    for (const [key, value] of Object.entries(values)) {
      if (key.startsWith("param:")) params[key.slice(6)] = value;
    }
    if (values.displayName?.trim()) void wizard.setDisplayName(values.displayName);
    void wizard.submitMeta({
      party1Name: values.party1Name ?? "",
      party1Address: values.party1Address ?? "",
      party2Name: values.party2Name ?? "",
      party2Address: values.party2Address ?? "",
      date: values.date ?? "",
      params,
    });
  } else if (form.dataset.action === "create-version") {
    void wizard.createVersion(values.text ?? "", values.commentary ?? "", values.author ?? "");
  } else if (form.dataset.action === "run-query") {
    void wizard.runQuery({
      category: values.category ?? "",
      relation: (values.relation ?? "") as "" | "on" | "before" | "after",
      date: values.date ?? "",
      party1Name: values.party1Name ?? "",
      party2Name: values.party2Name ?? "",
      party1Address: values.party1Address ?? "",
      party2Address: values.party2Address ?? "",
      keywords: values.keywords ?? "",
      contains: values.contains ?? "",
      tag: values.tag ?? "",
    });
  }
});

void wizard.loadGenerics();
render();
