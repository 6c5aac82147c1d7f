/**
 * Character builder: guided spec assembly against the aspect catalog.
 *
 * The form cannot produce an invalid spec. Selects only offer catalog
 * labels, each checkbox group stops accepting picks at three, and the
 * forge button stays disabled while any constraint is unmet. Validation
 * runs once more on submit, so even a tampered DOM never reaches the
 * service with a bad spec.
 */

import type { Catalog, CharacterSpec } from "./api.js";

export const PICK_MIN = 1;
export const PICK_MAX = 3;

type PickKind = "traits" | "skills";

export function specViolations(spec: CharacterSpec, catalog: Catalog): string[] {
  const out: string[] = [];
  if (!catalog.careers.includes(spec.career)) {
    out.push(`career: ${spec.career || "nothing"} is not a catalog career`);
  }
  if (!catalog.aspirations.includes(spec.aspiration)) {
    out.push(`aspiration: ${spec.aspiration || "nothing"} is not a catalog aspiration`);
  }
  for (const kind of ["traits", "skills"] as PickKind[]) {
    const picked = spec[kind];
    if (picked.length < PICK_MIN || picked.length > PICK_MAX) {
      out.push(`${kind}: pick between ${PICK_MIN} and ${PICK_MAX}`);
    }
    if (new Set(picked).size !== picked.length) {
      out.push(`${kind}: duplicate labels`);
    }
    for (const label of picked) {
      if (!catalog[kind].includes(label)) {
        out.push(`${kind}: ${label} is not in the catalog`);
      }
    }
  }
  return out;
}

function option(value: string, label = value): HTMLOptionElement {
  const el = document.createElement("option");
  el.value = value;
  el.textContent = label;
  return el;
}

export class BuilderView {
  readonly career: HTMLSelectElement;
  readonly aspiration: HTMLSelectElement;
  readonly forgeButton: HTMLButtonElement;
  readonly problems: HTMLUListElement;
  private readonly groups: Record<PickKind, HTMLFieldSetElement>;

  constructor(
    root: HTMLElement,
    private readonly catalog: Catalog,
    private readonly onForge: (spec: CharacterSpec) => Promise<void>,
  ) {
    this.career = this.labelledSelect(root, "Career", catalog.careers);
    this.aspiration = this.labelledSelect(root, "Aspiration", catalog.aspirations);
    this.groups = {
      traits: this.checkboxGroup(root, "traits", catalog.traits),
      skills: this.checkboxGroup(root, "skills", catalog.skills),
    };

    this.problems = document.createElement("ul");
    this.problems.className = "problems";
    root.appendChild(this.problems);

    this.forgeButton = document.createElement("button");
    this.forgeButton.type = "button";
    this.forgeButton.textContent = "Forge character";
    this.forgeButton.addEventListener("click", () => void this.submit());
    root.appendChild(this.forgeButton);

    this.refresh();
  }

  private labelledSelect(
    root: HTMLElement, title: string, labels: string[],
  ): HTMLSelectElement {
    const wrap = document.createElement("label");
    wrap.textContent = title;
    const select = document.createElement("select");
    select.appendChild(option("", `choose a ${title.toLowerCase()}`));
    for (const label of labels) select.appendChild(option(label));
    select.addEventListener("change", () => this.refresh());
    wrap.appendChild(select);
    root.appendChild(wrap);
    return select;
  }

  private checkboxGroup(
    root: HTMLElement, kind: PickKind, labels: string[],
  ): HTMLFieldSetElement {
    const group = document.createElement("fieldset");
    group.dataset.kind = kind;
    const legend = document.createElement("legend");
    legend.textContent = `${kind} (pick ${PICK_MIN} to ${PICK_MAX})`;
    group.appendChild(legend);
    for (const label of labels) {
      const row = document.createElement("label");
      const box = document.createElement("input");
      box.type = "checkbox";
      box.value = label;
      box.title = this.catalog.descriptions[label] ?? "";
      box.addEventListener("change", () => this.refresh());
      row.appendChild(box);
      row.appendChild(document.createTextNode(label));
      group.appendChild(row);
    }
    root.appendChild(group);
    return group;
  }

  picked(kind: PickKind): string[] {
    const boxes = this.groups[kind].querySelectorAll<HTMLInputElement>(
      "input[type=checkbox]:checked",
    );
    return Array.from(boxes, (b) => b.value);
  }

  currentSpec(): CharacterSpec {
    return {
      career: this.career.value,
      aspiration: this.aspiration.value,
      traits: this.picked("traits"),
      skills: this.picked("skills"),
    };
  }

  violations(): string[] {
    return specViolations(this.currentSpec(), this.catalog);
  }

  /** Re-applies the pick cap and submit gating after any change. */
  refresh(): void {
    for (const kind of ["traits", "skills"] as PickKind[]) {
      const full = this.picked(kind).length >= PICK_MAX;
      const boxes = this.groups[kind].querySelectorAll<HTMLInputElement>(
        "input[type=checkbox]",
      );
      for (const box of boxes) box.disabled = full && !box.checked;
    }
    this.forgeButton.disabled = this.violations().length > 0;
  }

  private showProblems(problems: string[]): void {
    this.problems.replaceChildren(
      ...problems.map((p) => {
        const li = document.createElement("li");
        li.textContent = p;
        return li;
      }),
    );
  }

  /** Final gate: never calls the service while constraints are unmet. */
  async submit(): Promise<boolean> {
    const problems = this.violations();
    this.showProblems(problems);
    if (problems.length > 0) return false;
    await this.onForge(this.currentSpec());
    return true;
  }
}
