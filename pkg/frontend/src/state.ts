// Wizard state machine. All drafting rules live server-side: every action
// here either issues a documented API call or moves between screens, and
// the session snapshot returned by each edit overwrites optimistic state.

import { ApiClient, RequestFailed } from "./api.js";
import type {
  Edit,
  GenericBundle,
  GenericInfo,
  InstanceSummary,
  ParamSpec,
  Remedy,
  Rendered,
  Session,
  Stage,
  UnitPath,
  UnitTemplate,
  Violation,
} from "./types.js";

export type Screen =
  | "pick-generic"
  | "meta"
  | "part-walkthrough"
  | "optional-parts"
  | "review"
  | "done"
  | "query"
  | "expand";

export interface UnitRef {
  path: UnitPath;
  unit: UnitTemplate;
}

export interface MetaForm {
  party1Name: string;
  party1Address: string;
  party2Name: string;
  party2Address: string;
  date: string;
  params: Record<string, string>;
}

export interface QueryForm {
  category: string;
  relation: "" | "on" | "before" | "after";
  date: string;
  party1Name: string;
  party2Name: string;
  party1Address: string;
  party2Address: string;
  keywords: string;
  contains: string;
  tag: string;
}

export interface WizardState {
  screen: Screen;
  generics: GenericInfo[];
  bundle: GenericBundle | null;
  session: Session | null;
  violations: Violation[];
  checked: boolean; // a check ran and `violations` reflects the current draft
  walkUnits: UnitPath[];
  walkIndex: number;
  walkReturn: Screen; // where "done reviewing" goes back to
  helpOpen: boolean;
  editorOpen: boolean;
  formError: string | null;
  banner: string | null;
  finalInstance: { id: string; display_name: string } | null;
  queryResults: InstanceSummary[] | null;
  expanded: Rendered | null;
  expandedId: string | null;
}

export const DATE_RE = /^\d{4}-\d{2}-\d{2}$/;
export const DATE_INPUT_RE = /^\d{4}(-\d{2})?(-\d{2})?$/;

export function initialState(): WizardState {
  return {
    screen: "pick-generic",
    generics: [],
    bundle: null,
    session: null,
    violations: [],
    checked: false,
    walkUnits: [],
    walkIndex: 0,
    walkReturn: "optional-parts",
    helpOpen: false,
    editorOpen: false,
    formError: null,
    banner: null,
    finalInstance: null,
    queryResults: null,
    expanded: null,
    expandedId: null,
  };
}

// ---------------------------------------------------------------------------
// Tree helpers (pure; shared with the views)
// ---------------------------------------------------------------------------

export function samePath(a: UnitPath, b: UnitPath): boolean {
  return a.length === b.length && a.every((x, i) => x === b[i]);
}

export function walkTree(bundle: GenericBundle): UnitRef[] {
  const out: UnitRef[] = [];
  const rec = (prefix: UnitPath, units: UnitTemplate[]) => {
    for (const unit of [...units].sort((a, b) => a.order - b.order)) {
      const path = [...prefix, unit.label];
      out.push({ path, unit });
      if (unit.children?.length) rec(path, unit.children);
    }
  };
  rec([], bundle.generic.parts);
  return out;
}

export function findUnit(bundle: GenericBundle, path: UnitPath): UnitTemplate | null {
  let units: UnitTemplate[] = bundle.generic.parts;
  let found: UnitTemplate | null = null;
  for (const label of path) {
    found = units.find((u) => u.label === label) ?? null;
    if (!found) return null;
    units = found.children ?? [];
  }
  return found;
}

/** Atomic units whose whole ancestor chain is compulsory: the
 * section-by-section list the compulsory walkthrough presents. */
export function compulsoryWalkUnits(bundle: GenericBundle): UnitPath[] {
  const out: UnitPath[] = [];
  const rec = (prefix: UnitPath, units: UnitTemplate[]) => {
    for (const unit of [...units].sort((a, b) => a.order - b.order)) {
      if (unit.inclusion !== "compulsory") continue;
      const path = [...prefix, unit.label];
      if (unit.versions?.length) out.push(path);
      if (unit.children?.length) rec(path, unit.children);
    }
  };
  rec([], bundle.generic.parts);
  return out;
}

export function optionalUnits(bundle: GenericBundle): UnitRef[] {
  return walkTree(bundle).filter(({ unit }) => unit.inclusion === "optional");
}

export function isIncluded(session: Session, bundle: GenericBundle, path: UnitPath): boolean {
  for (let i = 1; i <= path.length; i++) {
    const prefix = path.slice(0, i);
    const unit = findUnit(bundle, prefix);
    if (!unit) return false;
    if (
      unit.inclusion === "optional" &&
      !session.draft.included_optional.some((p) => samePath(p, prefix))
    ) {
      return false;
    }
    if (unit.versions?.length && !selectedVersion(session, prefix)) return false;
  }
  return true;
}

export function selectedVersion(session: Session, path: UnitPath): number | null {
  const hit = session.draft.selections.find((s) => samePath(s.unit, path));
  return hit ? hit.version : null;
}

export function bindingValue(session: Session, scope: UnitPath | null, name: string): unknown {
  const hit = session.draft.bindings.find(
    (b) => b.name === name && (b.scope === null ? scope === null : scope !== null && samePath(b.scope, scope)),
  );
  return hit?.value;
}

function coerceValue(spec: ParamSpec | undefined, raw: string): { kind: string; value: unknown } | string {
  const kind = spec?.kind ?? "string";
  if (kind === "integer") {
    if (!/^-?\d+$/.test(raw.trim())) return `"${raw}" is not an integer`;
    return { kind, value: parseInt(raw.trim(), 10) };
  }
  if (kind === "date") {
    if (!DATE_RE.test(raw.trim())) return `"${raw}" is not a date (YYYY-MM-DD)`;
    return { kind, value: raw.trim() };
  }
  return { kind: "string", value: raw };
}

// ---------------------------------------------------------------------------
// The wizard
// ---------------------------------------------------------------------------

export class Wizard {
  state: WizardState = initialState();
  onChange: () => void = () => {};

  constructor(private api: ApiClient) {}

  private notify() {
    this.onChange();
  }

  private fail(err: unknown) {
    this.state.banner =
      err instanceof RequestFailed ? `${err.error.code}: ${err.error.message}` : String(err);
    this.notify();
  }

  /** Finalize stays disabled until a check has run against the current
   * draft and came back empty. */
  canFinalize(): boolean {
    return (
      this.state.session !== null &&
      this.state.session.stage !== "finalized" &&
      this.state.checked &&
      this.state.violations.length === 0
    );
  }

  pendingCount(): number {
    return this.state.violations.filter((v) => v.pending).length;
  }

  private async edit(edit: Edit): Promise<Violation[]> {
    if (!this.state.session) throw new Error("no active session");
    const res = await this.api.applyEdit(this.state.session.session_id, edit);
    this.state.session = res.session;
    if (res.session.autocheck) {
      this.state.violations = res.violations;
      this.state.checked = true;
    } else {
      this.state.checked = false; // stale until the next explicit check
    }
    this.state.banner = null;
    this.notify();
    return res.violations;
  }

  // -- pick-generic ---------------------------------------------------------

  async loadGenerics(): Promise<void> {
    try {
      this.state.generics = await this.api.listGenerics();
      this.notify();
    } catch (err) {
      this.fail(err);
    }
  }

  async pickGeneric(docType: string): Promise<void> {
    try {
      this.state.bundle = await this.api.getGeneric(docType);
      this.state.session = await this.api.startSession(docType);
      this.state.screen = "meta";
      this.state.violations = [];
      this.state.checked = false;
      this.state.finalInstance = null;
      this.notify();
    } catch (err) {
      this.fail(err);
    }
  }

  // -- meta -------------------------------------------------------------------

  async submitMeta(form: MetaForm): Promise<boolean> {
    this.state.formError = null;
    if (!form.party1Name.trim() || !form.party2Name.trim()) {
      this.state.formError = "Both party names are required.";
      this.notify();
      return false;
    }
    if (!DATE_RE.test(form.date.trim())) {
      this.state.formError = "The date must be YYYY-MM-DD.";
      this.notify();
      return false;
    }
    const coerced: { name: string; value: { kind: string; value: unknown } }[] = [];
    for (const spec of this.state.bundle?.generic.params ?? []) {
      const raw = form.params[spec.name] ?? "";
      if (!raw.trim()) continue; // required params surface at finalize
      const value = coerceValue(spec, raw);
      if (typeof value === "string") {
        this.state.formError = `$${spec.name}: ${value}`;
        this.notify();
        return false;
      }
      coerced.push({ name: spec.name, value });
    }
    try {
      await this.edit({
        kind: "set_parties",
        party1: { name: form.party1Name.trim(), address: form.party1Address.trim() },
        party2: { name: form.party2Name.trim(), address: form.party2Address.trim() },
      });
      await this.edit({ kind: "set_date", date: form.date.trim() });
      for (const { name, value } of coerced) {
        await this.edit({ kind: "set_param", scope: null, name, value });
      }
      await this.startCompulsoryWalkthrough();
      return true;
    } catch (err) {
      this.fail(err);
      return false;
    }
  }

  async setDisplayName(name: string): Promise<void> {
    if (!name.trim()) return;
    try {
      await this.edit({ kind: "set_display_name", display_name: name.trim() });
    } catch (err) {
      this.fail(err);
    }
  }

  // -- part walkthrough -------------------------------------------------------

  async startCompulsoryWalkthrough(): Promise<void> {
    if (!this.state.bundle) return;
    await this.setStage("compulsory");
    this.state.walkUnits = compulsoryWalkUnits(this.state.bundle);
    this.state.walkIndex = 0;
    this.state.walkReturn = "optional-parts";
    this.state.screen = "part-walkthrough";
    this.state.helpOpen = false;
    this.state.editorOpen = false;
    this.notify();
  }

  /** Review one unit (typically an optional one just included). */
  reviewUnit(path: UnitPath): void {
    this.state.walkUnits = [path];
    this.state.walkIndex = 0;
    this.state.walkReturn = "optional-parts";
    this.state.screen = "part-walkthrough";
    this.state.helpOpen = false;
    this.state.editorOpen = false;
    this.notify();
  }

  currentWalkUnit(): UnitRef | null {
    const path = this.state.walkUnits[this.state.walkIndex];
    if (!path || !this.state.bundle) return null;
    const unit = findUnit(this.state.bundle, path);
    return unit ? { path, unit } : null;
  }

  async chooseVersion(version: number): Promise<void> {
    const current = this.currentWalkUnit();
    if (!current) return;
    try {
      await this.edit({ kind: "choose_version", unit: current.path, version });
    } catch (err) {
      this.fail(err);
    }
  }

  /** Accept the currently selected version and move on. */
  async acceptCurrent(): Promise<void> {
    const current = this.currentWalkUnit();
    if (!current || !this.state.session) return;
    const version = selectedVersion(this.state.session, current.path);
    try {
      if (version !== null) {
        await this.edit({ kind: "choose_version", unit: current.path, version });
      }
      await this.nextUnit();
    } catch (err) {
      this.fail(err);
    }
  }

  async nextUnit(): Promise<void> {
    if (this.state.walkIndex + 1 < this.state.walkUnits.length) {
      this.state.walkIndex += 1;
      this.state.helpOpen = false;
      this.state.editorOpen = false;
      this.notify();
    } else {
      await (this.state.walkReturn === "optional-parts"
        ? this.gotoOptional()
        : Promise.resolve(this.goto(this.state.walkReturn)));
    }
  }

  prevUnit(): void {
    if (this.state.walkIndex > 0) {
      this.state.walkIndex -= 1;
      this.state.helpOpen = false;
      this.notify();
    } else {
      this.state.screen = "meta";
      this.notify();
    }
  }

  toggleHelp(): void {
    this.state.helpOpen = !this.state.helpOpen;
    this.notify();
  }

  openEditor(open: boolean): void {
    this.state.editorOpen = open;
    this.state.formError = null;
    this.notify();
  }

  /** Create a new version. Commentary is mandatory: the engine stores the
   * reasons for every modification, so an empty one is blocked client-side. */
  async createVersion(text: string, commentary: string, author = ""): Promise<boolean> {
    const current = this.currentWalkUnit();
    if (!current) return false;
    if (!commentary.trim()) {
      this.state.formError =
        "Please record the reason for the new wording; the commentary travels with the version.";
      this.notify();
      return false;
    }
    if (!text.trim()) {
      this.state.formError = "The new wording must not be empty.";
      this.notify();
      return false;
    }
    try {
      await this.edit({ kind: "create_version", unit: current.path, text, commentary, author });
      this.state.editorOpen = false;
      this.state.formError = null;
      this.notify();
      return true;
    } catch (err) {
      this.fail(err);
      return false;
    }
  }

  async setUnitParam(name: string, raw: string): Promise<void> {
    const current = this.currentWalkUnit();
    if (!current || !this.state.session) return;
    const specs = [
      ...(current.unit.params ?? []),
      ...(current.unit.versions ?? []).flatMap((v) => v.params ?? []),
    ];
    const value = coerceValue(specs.find((s) => s.name === name), raw);
    if (typeof value === "string") {
      this.state.formError = `$${name}: ${value}`;
      this.notify();
      return;
    }
    try {
      await this.edit({ kind: "set_param", scope: current.path, name, value });
      this.state.formError = null;
      this.notify();
    } catch (err) {
      this.fail(err);
    }
  }

  // -- optional parts -----------------------------------------------------------

  async gotoOptional(): Promise<void> {
    await this.setStage("optional");
    this.state.screen = "optional-parts";
    this.notify();
  }

  async toggleOptional(path: UnitPath, include: boolean): Promise<void> {
    try {
      await this.edit(include ? { kind: "include_unit", unit: path } : { kind: "exclude_unit", unit: path });
    } catch (err) {
      this.fail(err);
    }
  }

  async toggleAutocheck(enabled: boolean): Promise<void> {
    try {
      await this.edit({ kind: "toggle_autocheck", enabled });
    } catch (err) {
      this.fail(err);
    }
  }

  async runCheck(): Promise<void> {
    if (!this.state.session) return;
    try {
      this.state.violations = await this.api.check(this.state.session.session_id);
      this.state.checked = true;
      this.state.banner = null;
      this.notify();
    } catch (err) {
      this.fail(err);
    }
  }

  /** One-click remedy. Structural remedies re-check immediately so the
   * banner reflects the new state; parameter remedies deep-link back to
   * the data entry screen. */
  async applyRemedy(remedy: Remedy): Promise<void> {
    if (remedy.action === "set_parameter") {
      this.state.screen = "meta";
      this.notify();
      return;
    }
    if (!remedy.unit) return;
    try {
      await this.edit(
        remedy.action === "include"
          ? { kind: "include_unit", unit: remedy.unit }
          : { kind: "exclude_unit", unit: remedy.unit },
      );
      await this.runCheck();
    } catch (err) {
      this.fail(err);
    }
  }

  // -- review / finalize ----------------------------------------------------------

  async gotoReview(): Promise<void> {
    await this.setStage("review");
    this.state.screen = "review";
    await this.runCheck();
  }

  async finalizeDraft(): Promise<void> {
    if (!this.state.session || !this.canFinalize()) return;
    try {
      const res = await this.api.finalize(this.state.session.session_id);
      this.state.finalInstance = res.instance;
      this.state.session = await this.api.getSession(this.state.session.session_id);
      this.state.screen = "done";
      this.notify();
    } catch (err) {
      if (err instanceof RequestFailed && err.error.violations) {
        this.state.violations = err.error.violations;
        this.state.checked = true;
        this.state.banner = err.error.message;
        this.notify();
      } else {
        this.fail(err);
      }
    }
  }

  private async setStage(stage: Stage): Promise<void> {
    if (!this.state.session || this.state.session.stage === stage) return;
    if (this.state.session.stage === "finalized") return;
    try {
      await this.edit({ kind: "set_stage", stage });
    } catch (err) {
      this.fail(err);
    }
  }

  /** Backward navigation is free anywhere before finalize. */
  back(): void {
    const order: Screen[] = ["pick-generic", "meta", "part-walkthrough", "optional-parts", "review"];
    const i = order.indexOf(this.state.screen);
    if (i > 0) {
      this.state.screen = order[i - 1]!;
      this.notify();
    } else if (this.state.screen === "expand") {
      this.state.screen = "query";
      this.notify();
    }
  }

  goto(screen: Screen): void {
    this.state.screen = screen;
    this.notify();
  }

  // -- query / expand -----------------------------------------------------------

  queryParams(form: QueryForm): URLSearchParams | string {
    const params = new URLSearchParams();
    if (form.category.trim()) params.set("category", form.category.trim());
    if (form.relation) {
      if (!DATE_INPUT_RE.test(form.date.trim())) {
        return "Dates must be YYYY, YYYY-MM, or YYYY-MM-DD.";
      }
      params.set(form.relation, form.date.trim());
    }
    // The API pins one name pattern and one address pattern to a party
    // index, so only one side of each pair may be filled at a time.
    if (form.party1Name.trim() && form.party2Name.trim()) {
      return "Fill the name for one party only (the filter pins to a single side).";
    }
    if (form.party1Address.trim() && form.party2Address.trim()) {
      return "Fill the address for one party only (the filter pins to a single side).";
    }
    const name = form.party1Name.trim() || form.party2Name.trim();
    if (name) {
      params.set("party_name", name);
      params.set("party", form.party1Name.trim() ? "1" : "2");
    }
    const address = form.party1Address.trim() || form.party2Address.trim();
    if (address) {
      params.set("party_address", address);
      if (!params.has("party")) {
        params.set("party", form.party1Address.trim() ? "1" : "2");
      }
    }
    for (const kw of form.keywords.split(",")) {
      if (kw.trim()) params.append("keyword", kw.trim());
    }
    if (form.contains.trim()) {
      if (!form.contains.includes("@")) return 'Contents filters use "Part/Section@N".';
      params.append("contains", form.contains.trim());
    }
    if (form.tag.trim()) params.set("tag", form.tag.trim());
    return params;
  }

  async runQuery(form: QueryForm): Promise<void> {
    const params = this.queryParams(form);
    if (typeof params === "string") {
      this.state.formError = params;
      this.notify();
      return;
    }
    try {
      this.state.formError = null;
      this.state.queryResults = await this.api.queryInstances(params);
      this.notify();
    } catch (err) {
      this.fail(err);
    }
  }

  async expand(id: string): Promise<void> {
    try {
      this.state.expanded = await this.api.render(id, "text");
      this.state.expandedId = id;
      this.state.screen = "expand";
      this.notify();
    } catch (err) {
      this.fail(err);
    }
  }
}
