/** Page bootstrap: tabs plus the three views wired to one API client. */

import { ApiClient } from "./api.js";
import { BuilderView } from "./builder.js";
import { ChatView } from "./chat.js";
import { ReportsView } from "./reports.js";

function mustFind<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function wireTabs(): void {
  const buttons = document.querySelectorAll<HTMLButtonElement>("nav button[data-tab]");
  const sections = document.querySelectorAll<HTMLElement>("main > section");
  for (const button of buttons) {
    button.addEventListener("click", () => {
      for (const b of buttons) b.classList.toggle("active", b === button);
      for (const s of sections) {
        s.hidden = s.id !== button.dataset.tab;
      }
    });
  }
}

async function boot(): Promise<void> {
  const api = new ApiClient("");
  const catalog = await api.getCatalog();

  const chat = new ChatView(mustFind("chat"), api, catalog);
  const reports = new ReportsView(mustFind("reports"), api);
  new BuilderView(mustFind("builder"), catalog, async (spec) => {
    await api.forgeCharacter(spec);
    await Promise.all([chat.refreshCharacters(), reports.refreshCharacters()]);
  });

  wireTabs();
  await Promise.all([
    chat.refreshCharacters(),
    reports.refreshCharacters(),
    reports.showExisting(),
  ]);
}

void boot();
