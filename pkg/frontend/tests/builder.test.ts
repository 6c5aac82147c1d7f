// The builder must make every invalid spec unsubmittable: wrong arity,
// labels outside the catalog, even straight DOM tampering.
import { beforeEach, describe, expect, it, vi } from "vitest";

import type { Catalog, CharacterSpec } from "../src/api";
import { BuilderView, PICK_MAX, specViolations } from "../src/builder";

const CATALOG: Catalog = {
  careers: ["Astronaut", "Scientist", "Painter"],
  aspirations: ["Fortune", "Knowledge"],
  traits: ["Cheerful", "Genius", "Loner", "Ambitious", "Goofball"],
  skills: ["Cooking", "Charisma", "Fishing", "Gardening"],
  emotions: ["Fine", "Angry"],
  topics: ["small talk", "complaints"],
  scene_types: ["chat", "debate", "discussion", "speech"],
  descriptions: {},
};

function mount() {
  document.body.innerHTML = "<section id='builder'></section>";
  const onForge = vi.fn(async (_: CharacterSpec) => {});
  const view = new BuilderView(
    document.getElementById("builder")!, CATALOG, onForge,
  );
  return { view, onForge };
}

function check(view: BuilderView, kind: "traits" | "skills", label: string) {
  const box = Array.from(
    document.querySelectorAll<HTMLInputElement>(
      `fieldset[data-kind=${kind}] input[type=checkbox]`,
    ),
  ).find((b) => b.value === label)!;
  box.checked = true;
  box.dispatchEvent(new Event("change"));
  return box;
}

function pickValid(view: BuilderView) {
  view.career.value = "Astronaut";
  view.career.dispatchEvent(new Event("change"));
  view.aspiration.value = "Fortune";
  view.aspiration.dispatchEvent(new Event("change"));
  check(view, "traits", "Cheerful");
  check(view, "skills", "Cooking");
}

describe("builder constraints", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("starts disabled and refuses an empty submit", async () => {
    const { view, onForge } = mount();
    expect(view.forgeButton.disabled).toBe(true);
    expect(await view.submit()).toBe(false);
    expect(onForge).not.toHaveBeenCalled();
    expect(view.problems.textContent).toContain("career");
  });

  it("blocks submission until every field is set", async () => {
    const { view, onForge } = mount();
    view.career.value = "Astronaut";
    view.career.dispatchEvent(new Event("change"));
    expect(view.forgeButton.disabled).toBe(true);
    expect(await view.submit()).toBe(false);

    view.aspiration.value = "Fortune";
    view.aspiration.dispatchEvent(new Event("change"));
    check(view, "traits", "Genius");
    expect(await view.submit()).toBe(false); // skills still empty
    expect(view.problems.textContent).toContain("skills");
    expect(onForge).not.toHaveBeenCalled();
  });

  it("caps trait picks at three by disabling the rest", () => {
    const { view } = mount();
    check(view, "traits", "Cheerful");
    check(view, "traits", "Genius");
    check(view, "traits", "Loner");
    const boxes = document.querySelectorAll<HTMLInputElement>(
      "fieldset[data-kind=traits] input[type=checkbox]",
    );
    const disabled = Array.from(boxes).filter((b) => b.disabled);
    expect(view.picked("traits")).toHaveLength(PICK_MAX);
    expect(disabled.map((b) => b.value).sort()).toEqual(
      ["Ambitious", "Goofball"],
    );
    // unchecking one re-opens the group
    boxes[0].checked = false;
    boxes[0].dispatchEvent(new Event("change"));
    expect(Array.from(boxes).every((b) => !b.disabled)).toBe(true);
  });

  it("rejects a fourth trait even when forced past the disable", async () => {
    const { view, onForge } = mount();
    pickValid(view);
    check(view, "traits", "Genius");
    check(view, "traits", "Loner");
    const fourth = Array.from(
      document.querySelectorAll<HTMLInputElement>(
        "fieldset[data-kind=traits] input[type=checkbox]",
      ),
    ).find((b) => b.value === "Ambitious")!;
    fourth.disabled = false; // simulate devtools tampering
    fourth.checked = true;
    fourth.dispatchEvent(new Event("change"));
    expect(view.violations().join(" ")).toContain("traits: pick between");
    expect(await view.submit()).toBe(false);
    expect(onForge).not.toHaveBeenCalled();
  });

  it("rejects labels outside the catalog even if injected", async () => {
    const { view, onForge } = mount();
    pickValid(view);
    const rogue = document.createElement("option");
    rogue.value = "Wizard";
    view.career.appendChild(rogue);
    view.career.value = "Wizard";
    view.career.dispatchEvent(new Event("change"));
    expect(view.forgeButton.disabled).toBe(true);
    expect(await view.submit()).toBe(false);
    expect(view.problems.textContent).toContain("Wizard");
    expect(onForge).not.toHaveBeenCalled();
  });

  it("rejects a tampered checkbox value", async () => {
    const { view, onForge } = mount();
    pickValid(view);
    const box = document.querySelector<HTMLInputElement>(
      "fieldset[data-kind=skills] input[type=checkbox]",
    )!;
    box.value = "Necromancy";
    box.dispatchEvent(new Event("change"));
    expect(await view.submit()).toBe(false);
    expect(view.problems.textContent).toContain("Necromancy");
    expect(onForge).not.toHaveBeenCalled();
  });

  it("submits exactly the picked spec once everything is valid", async () => {
    const { view, onForge } = mount();
    pickValid(view);
    check(view, "traits", "Genius");
    expect(view.forgeButton.disabled).toBe(false);
    expect(await view.submit()).toBe(true);
    expect(onForge).toHaveBeenCalledTimes(1);
    expect(onForge).toHaveBeenCalledWith({
      career: "Astronaut",
      aspiration: "Fortune",
      traits: ["Cheerful", "Genius"],
      skills: ["Cooking"],
    });
  });
});

describe("specViolations", () => {
  const valid: CharacterSpec = {
    career: "Scientist",
    aspiration: "Knowledge",
    traits: ["Cheerful", "Genius", "Loner"],
    skills: ["Fishing"],
  };

  it("accepts a valid spec", () => {
    expect(specViolations(valid, CATALOG)).toEqual([]);
  });

  it("collects one violation per broken constraint", () => {
    const bad: CharacterSpec = {
      career: "Wizard",
      aspiration: "",
      traits: [],
      skills: ["Cooking", "Charisma", "Fishing", "Gardening"],
    };
    const problems = specViolations(bad, CATALOG);
    expect(problems.some((p) => p.startsWith("career"))).toBe(true);
    expect(problems.some((p) => p.startsWith("aspiration"))).toBe(true);
    expect(problems.some((p) => p.startsWith("traits"))).toBe(true);
    expect(problems.some((p) => p.startsWith("skills"))).toBe(true);
  });

  it("flags duplicates", () => {
    const doubled = { ...valid, skills: ["Fishing", "Fishing"] };
    expect(specViolations(doubled, CATALOG).join(" ")).toContain("duplicate");
  });
});
